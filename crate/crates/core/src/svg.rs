//! Deterministic SVG drawings of maps and towers on a fixed 1000×1000 canvas.

use std::fmt::Write;

use crate::pl::{Interval, PlMap};
use crate::scalar::Scalar;
use crate::towers::Tower;

const SIZE: i64 = 1000;
const MARGIN: i64 = 40;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Canvas x for a unit-interval coordinate.
fn sx<S: Scalar>(x: &S) -> String {
    let span = S::from_int(SIZE - 2 * MARGIN);
    (S::from_int(MARGIN) + x.clone() * span).to_fixed(6)
}

/// Canvas y, flipped so that 0 is at the bottom.
fn sy<S: Scalar>(y: &S) -> String {
    let span = S::from_int(SIZE - 2 * MARGIN);
    (S::from_int(SIZE - MARGIN) - y.clone() * span).to_fixed(6)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#);
}

/// Graphs of the given maps on the unit square, one polyline each, with the
/// diagonal drawn faintly underneath.
pub fn maps_svg<S: Scalar>(maps: &[(String, PlMap<S>)]) -> String {
    let mut out = String::new();
    open(&mut out);
    let (lo, hi) = (S::zero(), S::one());
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        sx(&lo),
        sy(&hi),
        SIZE - 2 * MARGIN,
        SIZE - 2 * MARGIN
    );
    let _ = writeln!(
        out,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#cccccc" stroke-dasharray="4 4"/>"##,
        sx(&lo),
        sy(&lo),
        sx(&hi),
        sy(&hi)
    );
    for (i, (name, m)) in maps.iter().enumerate() {
        let points: Vec<String> = m.nodes().iter().map(|(x, y)| format!("{},{}", sx(x), sy(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"><title>{}</title></polyline>"#,
            points.join(" "),
            PALETTE[i % PALETTE.len()],
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Nested horizontal bars, lowest level at the bottom.
pub fn intervals_svg<S: Scalar>(levels: &[(String, Interval<S>)]) -> String {
    let mut out = String::new();
    open(&mut out);
    let n = levels.len().max(1) as i64;
    let band = (SIZE - 2 * MARGIN) / n;
    for (i, (label, a)) in levels.iter().enumerate() {
        let top = SIZE - MARGIN - band * (i as i64 + 1);
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}" fill-opacity="0.35" stroke="black"><title>{}</title></rect>"#,
            sx(a.left()),
            top + band / 8,
            (a.length() * S::from_int(SIZE - 2 * MARGIN)).to_fixed(6),
            band * 3 / 4,
            PALETTE[i % PALETTE.len()],
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn tower_svg<S: Scalar>(t: &Tower<S>) -> String {
    let levels: Vec<(String, Interval<S>)> = t
        .levels()
        .iter()
        .enumerate()
        .map(|(i, l)| (format!("level {} {}", i + 1, l.orbital), l.orbital.clone()))
        .collect();
    intervals_svg(&levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SignedOrbital;
    use crate::wreath::bump_on;
    use crate::{Rat, RatMap};

    #[test]
    fn identity_is_one_diagonal_polyline() {
        let s = maps_svg(&[("id".to_string(), RatMap::identity())]);
        assert_eq!(s.matches("<polyline").count(), 1);
        assert!(s.contains(r#"points="40.000000,960.000000 960.000000,40.000000""#));
    }

    #[test]
    fn map_polyline_has_one_point_per_node() {
        let a = crate::groups::f_generators::<Rat>(2).unwrap().maps()[0].clone();
        let s = maps_svg(&[("x0".to_string(), a)]);
        let pts = s.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split(' ').count(), 4);
        assert!(pts.contains("500.000000,730.000000"));
    }

    #[test]
    fn tower_bars_nest() {
        let ivs = [(1, 4, 3, 8), (1, 8, 1, 2), (0, 1, 1, 1)];
        let levels = ivs
            .iter()
            .map(|&(a, b, c, d)| {
                let o = Interval::new(Rat::new(a, b), Rat::new(c, d)).unwrap();
                SignedOrbital::new(o.clone(), bump_on(&o), None).unwrap()
            })
            .collect();
        let t = Tower::new(levels).unwrap();
        let s = tower_svg(&t);
        assert_eq!(s.matches("<rect").count(), 4);
        let widths: Vec<f64> = s
            .split("width=\"")
            .skip(3) // svg element and background
            .map(|w| w.split('"').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(widths.len(), 3);
        assert!(widths.windows(2).all(|w| w[0] < w[1]), "{widths:?}");
        assert_eq!(s, tower_svg(&t));
    }
}
