//! Explicit realizations of iterated wreath products, and the machinery of
//! mutual efficiency and double commutators used to rule out wider top groups.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GroupSpec;
use crate::pl::{Interval, PlMap};
use crate::scalar::Scalar;
use crate::towers::fits_fundamental_domain;

/// The one-orbital map on `a` with nodes `(a,a)`, `(a+(b−a)/4, a+(b−a)/2)`, `(b,b)`.
pub fn bump_on<S: Scalar>(a: &Interval<S>) -> PlMap<S> {
    let (l, r) = (a.left().clone(), a.right().clone());
    let w = r.clone() - l.clone();
    let mut nodes = vec![(S::zero(), S::zero())];
    nodes.push((l.clone(), l.clone()));
    nodes.push((
        l.clone() + w.clone() / S::from_int(4),
        l.clone() + w / S::from_int(2),
    ));
    nodes.push((r.clone(), r));
    nodes.push((S::one(), S::one()));
    nodes.dedup_by(|p, q| p.0 == q.0);
    PlMap::from_nodes(nodes).expect("bump nodes are monotone")
}

/// The affine copy of `f` supported in `a`: conjugation by `x ↦ left + (right − left)·x`.
pub fn rescale_into<S: Scalar>(f: &PlMap<S>, a: &Interval<S>) -> PlMap<S> {
    if f.is_identity() {
        return f.clone();
    }
    let (l, w) = (a.left().clone(), a.length());
    let mut nodes = vec![(S::zero(), S::zero())];
    for (x, y) in f.nodes() {
        nodes.push((l.clone() + w.clone() * x.clone(), l.clone() + w.clone() * y.clone()));
    }
    nodes.push((S::one(), S::one()));
    nodes.dedup_by(|p, q| p.0 == q.0);
    PlMap::from_nodes(nodes).expect("affine image of a valid map")
}

/// `G wr Z` realized on `ambient`: the top generator is a bump on `ambient`,
/// the base generators are copies of `G` squeezed into one fundamental domain
/// of it, and further copies are conjugates by powers of the top.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct WreathRealization<S> {
    pub base_generators: Vec<(String, PlMap<S>)>,
    pub top_generator: (String, PlMap<S>),
    pub ambient: Interval<S>,
    pub copies_materialized: usize,
}

impl<S: Scalar> WreathRealization<S> {
    /// The fundamental domain `[x0, x0·t]` holding copy 0 of the base.
    pub fn domain(&self) -> (S, S) {
        let a = &self.ambient;
        let x0 = a.left().clone() + a.length() / S::from_int(4);
        let x1 = self.top_generator.1.eval_unchecked(&x0);
        (x0, x1)
    }

    /// Copy `j` of the base generators, conjugated by `t^j`.
    pub fn copy(&self, j: i64) -> Vec<PlMap<S>> {
        let tj = self.top_generator.1.pow(j);
        self.base_generators.iter().map(|(_, m)| m.conjugate(&tj)).collect()
    }

    /// Base and top generators as one group, top last.
    pub fn group(&self) -> GroupSpec<S> {
        let mut gens = self.base_generators.clone();
        gens.push(self.top_generator.clone());
        GroupSpec::new(gens).expect("names were validated on construction")
    }

    /// Checks placement and the defining relations on the materialized copies.
    pub fn verify(&self) -> Result<()> {
        let t = &self.top_generator.1;
        if t.orbital_intervals() != vec![self.ambient.clone()] {
            return Err(Error::Verification(format!("top generator is not a single bump on {}", self.ambient)));
        }
        let (x0, x1) = self.domain();
        for (name, m) in &self.base_generators {
            if let Some((lo, hi)) = m.support_hull_in(&Interval::unit()) {
                if lo < x0 || hi > x1 {
                    return Err(Error::Verification(format!(
                        "base generator {name} leaves the fundamental domain [{x0}, {x1}]"
                    )));
                }
            }
        }
        let copies: Vec<Vec<PlMap<S>>> = (0..self.copies_materialized as i64).map(|j| self.copy(j)).collect();
        for (j, cj) in copies.iter().enumerate() {
            for (i, ci) in copies.iter().enumerate().take(j) {
                for a in ci {
                    for b in cj {
                        if !a.commutator(b).is_identity() {
                            return Err(Error::Verification(format!("copies {i} and {j} do not commute")));
                        }
                    }
                }
            }
            if j + 1 < copies.len() {
                let shifted: Vec<PlMap<S>> = cj.iter().map(|m| m.conjugate(t)).collect();
                if shifted != copies[j + 1] {
                    return Err(Error::Verification(format!("copy {j} conjugated by t is not copy {}", j + 1)));
                }
            }
        }
        Ok(())
    }
}

/// Realizes `G wr Z` on `ambient`, materializing `copies` copies of the base.
/// Identity generators of `G` are dropped.
#[allow(non_snake_case)]
pub fn wreath_with_Z<S: Scalar>(g: &GroupSpec<S>, ambient: &Interval<S>, copies: usize) -> Result<WreathRealization<S>> {
    wreath_named(g, ambient, copies, "t", |n| n.to_string())
}

fn wreath_named<S: Scalar>(
    g: &GroupSpec<S>,
    ambient: &Interval<S>,
    copies: usize,
    top: &str,
    rename: impl Fn(&str) -> String,
) -> Result<WreathRealization<S>> {
    if copies == 0 {
        return Err(Error::Precondition("at least one copy must be materialized".into()));
    }
    let t = bump_on(ambient);
    let x0 = ambient.left().clone() + ambient.length() / S::from_int(4);
    let x1 = t.eval_unchecked(&x0);
    let domain = Interval::new(x0, x1)?;
    let base_generators = g
        .names()
        .iter()
        .zip(g.maps())
        .filter(|(_, m)| !m.is_identity())
        .map(|(n, m)| (rename(n), rescale_into(m, &domain)))
        .collect();
    let w = WreathRealization {
        base_generators,
        top_generator: (top.to_string(), t),
        ambient: ambient.clone(),
        copies_materialized: copies,
    };
    w.group();
    w.verify()?;
    Ok(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    /// `W_1 = Z`, `W_i = W_(i−1) wr Z`.
    W,
    /// `G_1 = ⊕ Z`, `G_i = ⊕ (G_(i−1) wr Z)`, sums truncated to `m` terms.
    G,
}

const MAX_FAMILY_NODES: usize = 1 << 20;

/// Generators of the `i`-th member of a family.
///
/// `W_i` has bumps `t1, …, ti` with `t1` innermost and `ti` on `(0, 1)`; `m`
/// is not used. `G_i` splits `(0, 1)` into `m` equal pieces; piece `j` carries
/// `G_(i−1) wr Z` with names prefixed `cj.`, base names further prefixed `b.`,
/// and its top called `t`.
pub fn build_family<S: Scalar>(kind: FamilyKind, i: usize, m: usize) -> Result<GroupSpec<S>> {
    if i == 0 || m == 0 {
        return Err(Error::Precondition("family index and truncation must be at least 1".into()));
    }
    let g = match kind {
        FamilyKind::W => {
            let mut g = GroupSpec::new(vec![("t1".to_string(), bump_on(&Interval::unit()))])?;
            for level in 2..=i {
                let w = wreath_named(&g, &Interval::unit(), 1, &format!("t{level}"), |n| n.to_string())?;
                g = w.group();
                check_nodes(&g)?;
            }
            g
        }
        FamilyKind::G => {
            // m + m² + … + m^i generators, each with at least three nodes
            let mut count = 0usize;
            let mut layer = 1usize;
            for _ in 1..=i {
                layer = layer.saturating_mul(m);
                count = count.saturating_add(layer);
            }
            if count.saturating_mul(3) > MAX_FAMILY_NODES {
                return Err(Error::resource("family nodes", MAX_FAMILY_NODES as u64));
            }
            let mut inner: Option<GroupSpec<S>> = None;
            for _ in 1..=i {
                let mut gens = Vec::new();
                for j in 0..m {
                    let piece = Interval::new(S::from_ratio(j as i64, m as i64), S::from_ratio(j as i64 + 1, m as i64))?;
                    match &inner {
                        None => gens.push((format!("c{j}.t"), bump_on(&piece))),
                        Some(h) => {
                            let w = wreath_named(h, &piece, 1, &format!("c{j}.t"), |n| format!("c{j}.b.{n}"))?;
                            gens.extend(w.base_generators);
                            gens.push(w.top_generator);
                        }
                    }
                }
                let g = GroupSpec::new(gens)?;
                check_nodes(&g)?;
                inner = Some(g);
            }
            inner.expect("i ≥ 1")
        }
    };
    Ok(g)
}

fn check_nodes<S: Scalar>(g: &GroupSpec<S>) -> Result<()> {
    let total: usize = g.maps().iter().map(|m| m.node_count()).sum();
    if total > MAX_FAMILY_NODES {
        return Err(Error::resource("family nodes", MAX_FAMILY_NODES as u64));
    }
    Ok(())
}

/// Which map of a pair owns the orbital in question.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    H,
    K,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Efficiency<S> {
    Efficient,
    /// `orbital` of the map on `side` properly contains orbitals of the other
    /// map whose support there does not fit one fundamental domain.
    Violated { side: Side, orbital: Interval<S> },
}

impl<S> Efficiency<S> {
    pub fn is_efficient(&self) -> bool {
        matches!(self, Efficiency::Efficient)
    }
}

/// Overlapping orbitals must coincide or one closure must sit inside the other.
fn check_nesting<S: Scalar>(h: &PlMap<S>, k: &PlMap<S>) -> Result<()> {
    for a in h.orbital_intervals() {
        for b in k.orbital_intervals() {
            if a.overlaps(&b) && a != b && !a.contains_closure_of(&b) && !b.contains_closure_of(&a) {
                return Err(Error::Precondition(format!("orbitals {a} and {b} are not nested")));
            }
        }
    }
    Ok(())
}

fn one_sided<S: Scalar>(h: &PlMap<S>, k: &PlMap<S>) -> Result<Option<Interval<S>>> {
    for c in h.orbital_intervals() {
        if !k.orbital_intervals().iter().any(|o| c.properly_contains(o)) {
            continue;
        }
        let (lo, hi) = k.support_hull_in(&c).expect("k has an orbital in c");
        if !fits_fundamental_domain(h, &c, &lo, &hi)? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Whether `h` and `k` satisfy the mutual efficiency condition.
pub fn mutual_efficiency<S: Scalar>(h: &PlMap<S>, k: &PlMap<S>) -> Result<Efficiency<S>> {
    check_nesting(h, k)?;
    if let Some(orbital) = one_sided(h, k)? {
        return Ok(Efficiency::Violated { side: Side::H, orbital });
    }
    if let Some(orbital) = one_sided(k, h)? {
        return Ok(Efficiency::Violated { side: Side::K, orbital });
    }
    Ok(Efficiency::Efficient)
}

/// The lexicographically least `(j, kexp)` in `[1, cap]²` making `h^j` and
/// `k^kexp` mutually efficient.
pub fn efficiency_exponents<S: Scalar>(h: &PlMap<S>, k: &PlMap<S>, cap: i64) -> Result<(i64, i64)> {
    check_nesting(h, k)?;
    let kpows: Vec<PlMap<S>> = (1..=cap).map(|e| k.pow(e)).collect();
    for j in 1..=cap {
        let hj = h.pow(j);
        for (e, ke) in kpows.iter().enumerate() {
            if mutual_efficiency(&hj, ke)?.is_efficient() {
                return Ok((j, e as i64 + 1));
            }
        }
    }
    Err(Error::resource("efficiency exponent", cap as u64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcRole {
    /// An orbital of `h` properly inside an orbital of `k`; must be an orbital of `f`.
    NestedOrbitalOfH,
    /// An orbital of `f`; must sit properly inside an orbital of `k` that contains an orbital of `h`.
    OrbitalOfF,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct DcEntry<S> {
    pub orbital: Interval<S>,
    pub role: DcRole,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct DcReport<S> {
    pub f: PlMap<S>,
    pub entries: Vec<DcEntry<S>>,
    pub nested_survive: bool,
    pub f_orbitals_nested: bool,
}

/// Computes `f = [[h, k], k]` for a mutually efficient pair and checks both
/// orbital properties exactly.
pub fn dc_properties_check<S: Scalar>(h: &PlMap<S>, k: &PlMap<S>) -> Result<DcReport<S>> {
    if let Efficiency::Violated { side, orbital } = mutual_efficiency(h, k)? {
        return Err(Error::Precondition(format!(
            "not mutually efficient: orbital {orbital} of {side:?}"
        )));
    }
    let f = h.double_commutator(k);
    let (ho, ko, fo) = (h.orbital_intervals(), k.orbital_intervals(), f.orbital_intervals());
    let mut entries = Vec::new();
    for a in &ho {
        if ko.iter().any(|b| b.properly_contains(a)) {
            entries.push(DcEntry {
                orbital: a.clone(),
                role: DcRole::NestedOrbitalOfH,
                holds: fo.contains(a),
            });
        }
    }
    for o in &fo {
        let holds = ko
            .iter()
            .any(|b| b.properly_contains(o) && ho.iter().any(|a| b.contains(a)));
        entries.push(DcEntry {
            orbital: o.clone(),
            role: DcRole::OrbitalOfF,
            holds,
        });
    }
    let all = |role| entries.iter().filter(|e| e.role == role).all(|e| e.holds);
    Ok(DcReport {
        nested_survive: all(DcRole::NestedOrbitalOfH),
        f_orbitals_nested: all(DcRole::OrbitalOfF),
        f,
        entries,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionBounds {
    /// Search `|m|, |n| ≤ theta` for the shared-orbital product.
    pub theta: i64,
    /// Largest power tried for mutual efficiency.
    pub exponent_cap: i64,
}

impl Default for ObstructionBounds {
    fn default() -> Self {
        ObstructionBounds {
            theta: 32,
            exponent_cap: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ObstructionStep<S> {
    pub note: String,
    pub exponents: Vec<(String, i64)>,
    pub map: PlMap<S>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ObstructionOutcome<S> {
    pub log: Vec<ObstructionStep<S>>,
    pub gamma: PlMap<S>,
}

/// Nonzero `(m, n)` with `|m|, |n| ≤ bound`, ordered by `|m| + |n|`, then
/// positive `m` before negative, then `|m|`, then negative `n` first.
fn theta_candidates(bound: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for total in 2..=2 * bound {
        for am in 1..total {
            let an = total - am;
            if am > bound || an > bound {
                continue;
            }
            for m in [am, -am] {
                for n in [-an, an] {
                    out.push((m, n));
                }
            }
        }
    }
    out.sort_by_key(|&(m, n)| (m.abs() + n.abs(), m < 0, m.abs(), n > 0));
    out
}

fn improve<S: Scalar>(
    gamma: &PlMap<S>,
    against: &PlMap<S>,
    label: &str,
    cap: i64,
    log: &mut Vec<ObstructionStep<S>>,
) -> Result<PlMap<S>> {
    let (j, k) = efficiency_exponents(gamma, against, cap)?;
    let next = gamma.pow(j).double_commutator(&against.pow(k));
    log.push(ObstructionStep {
        note: format!("gamma <- [[gamma^{j}, {label}^{k}], {label}^{k}]"),
        exponents: vec![("j".into(), j), ("k".into(), k)],
        map: next.clone(),
    });
    if next.is_identity() {
        return Err(Error::Degenerate(format!("gamma became the identity after improving against {label}")));
    }
    Ok(next)
}

/// Replays the improvement loop: starting from `gamma`, repeatedly replaces it
/// by double commutators until it is nontrivial, supported away from `alpha`,
/// and so commutes with `alpha`.
pub fn obstruction_demo<S: Scalar>(
    alpha: &PlMap<S>,
    beta: &PlMap<S>,
    gamma: &PlMap<S>,
    bounds: &ObstructionBounds,
) -> Result<ObstructionOutcome<S>> {
    if !alpha.commutator(beta).is_identity() {
        return Err(Error::Precondition("alpha and beta do not commute".into()));
    }
    if gamma.is_identity() {
        return Err(Error::Precondition("gamma is the identity".into()));
    }
    let mut log = vec![ObstructionStep {
        note: "initial gamma".into(),
        exponents: Vec::new(),
        map: gamma.clone(),
    }];
    let mut g = improve(gamma, beta, "beta", bounds.exponent_cap, &mut log)?;
    let beta_orbitals = beta.orbital_intervals();
    let shared: Vec<Interval<S>> = alpha
        .orbital_intervals()
        .into_iter()
        .filter(|a| beta_orbitals.contains(a))
        .collect();
    for a in shared {
        let sa = alpha.slope_right(a.left());
        let sb = beta.slope_right(a.left());
        let mut found = None;
        for (m, n) in theta_candidates(bounds.theta) {
            if sa.powi(m) * sb.powi(n) != S::one() {
                continue;
            }
            let theta = alpha.pow(m).compose(&beta.pow(n));
            if theta.project(&a)?.is_identity() {
                found = Some((m, n, theta));
                break;
            }
        }
        let (m, n, theta) = found.ok_or_else(|| {
            Error::Inconclusive(format!(
                "no alpha^m beta^n with |m|, |n| <= {} is the identity on {a}",
                bounds.theta
            ))
        })?;
        log.push(ObstructionStep {
            note: format!("theta = alpha^{m} beta^{n} is the identity on {a}"),
            exponents: vec![("m".into(), m), ("n".into(), n)],
            map: theta.clone(),
        });
        g = improve(&g, &theta, "theta", bounds.exponent_cap, &mut log)?;
    }
    let alpha_orbitals = alpha.orbital_intervals();
    if let Some((x, y)) = g
        .orbital_intervals()
        .iter()
        .flat_map(|x| alpha_orbitals.iter().map(move |y| (x, y)))
        .find(|(x, y)| x.overlaps(y))
    {
        return Err(Error::Verification(format!("gamma orbital {x} meets alpha orbital {y}")));
    }
    if !g.commutator(alpha).is_identity() {
        return Err(Error::Verification("final gamma does not commute with alpha".into()));
    }
    Ok(ObstructionOutcome { log, gamma: g })
}
