//! Orientation-preserving piecewise-linear homeomorphisms of `[0, 1]`.
//!
//! Maps act on the right: `f.compose(&g)` applies `f` first and then `g`, so
//! `x(fg) = (xf)g`. Conjugation is `g^h = h⁻¹ g h` and commutators are
//! `[a, b] = a⁻¹ b⁻¹ a b`.
//!
//! A [`PlMap`] is stored as its canonical node list: `(0,0)` first, `(1,1)`
//! last, both coordinates strictly increasing, and every interior node a
//! genuine break in slope. Two maps are equal exactly when their node lists
//! are equal.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An open interval `(left, right)` with `0 <= left < right <= 1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval<S> {
    left: S,
    right: S,
}

impl<S: Scalar> Interval<S> {
    pub fn new(left: S, right: S) -> Result<Self> {
        if left < S::zero() || right > S::one() || left >= right {
            return Err(Error::InvalidInterval(left.to_string(), right.to_string()));
        }
        Ok(Interval { left, right })
    }

    pub fn unit() -> Self {
        Interval {
            left: S::zero(),
            right: S::one(),
        }
    }

    pub(crate) fn new_unchecked(left: S, right: S) -> Self {
        debug_assert!(left < right);
        Interval { left, right }
    }

    pub fn left(&self) -> &S {
        &self.left
    }

    pub fn right(&self) -> &S {
        &self.right
    }

    pub fn length(&self) -> S {
        self.right.clone() - self.left.clone()
    }

    pub fn midpoint(&self) -> S {
        S::midpoint(&self.left, &self.right)
    }

    /// Membership in the open interval.
    pub fn contains_point(&self, x: &S) -> bool {
        self.left < *x && *x < self.right
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &Self) -> bool {
        self.left <= other.left && other.right <= self.right
    }

    /// `other ⊊ self`.
    pub fn properly_contains(&self, other: &Self) -> bool {
        self.contains(other) && self != other
    }

    /// The closure of `other` lies inside the open interval `self`.
    pub fn contains_closure_of(&self, other: &Self) -> bool {
        self.left < other.left && other.right < self.right
    }

    /// `[lo, hi]` lies inside the open interval `self`.
    pub fn contains_closed(&self, lo: &S, hi: &S) -> bool {
        self.left < *lo && *hi < self.right
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.left < other.right && other.left < self.right
    }

    /// Shares at least one endpoint with `other`.
    pub fn shares_end_with(&self, other: &Self) -> bool {
        self.left == other.left || self.right == other.right
    }

    /// The image `(left·f, right·f)`.
    pub fn image(&self, f: &PlMap<S>) -> Self {
        Interval {
            left: f.eval_unchecked(&self.left),
            right: f.eval_unchecked(&self.right),
        }
    }

    /// The mirror image under `x ↦ 1 − x`.
    pub fn reflect(&self) -> Self {
        Interval {
            left: S::one() - self.right.clone(),
            right: S::one() - self.left.clone(),
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for Interval<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.left, self.right)
    }
}

impl<S: fmt::Display> fmt::Display for Interval<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.left, self.right)
    }
}

/// Direction in which a map moves the points of one of its orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

/// An orbital of a single map together with its direction of motion.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MapOrbital<S> {
    pub interval: Interval<S>,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffinePiece<S> {
    pub interval: Interval<S>,
    pub slope: S,
    pub intercept: S,
}

/// The affine components of a map, left to right. The first piece is the
/// leading affine component and the last the trailing one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineDecomposition<S> {
    pub pieces: Vec<AffinePiece<S>>,
}

impl<S: Scalar> AffineDecomposition<S> {
    pub fn leading(&self) -> &AffinePiece<S> {
        &self.pieces[0]
    }

    pub fn trailing(&self) -> &AffinePiece<S> {
        self.pieces.last().expect("at least one piece")
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PlMap<S> {
    nodes: Arc<[(S, S)]>,
}

fn slope_of<S: Scalar>(p: &(S, S), q: &(S, S)) -> S {
    (q.1.clone() - p.1.clone()) / (q.0.clone() - p.0.clone())
}

fn collinear<S: Scalar>(a: &(S, S), b: &(S, S), c: &(S, S)) -> bool {
    (b.1.clone() - a.1.clone()) * (c.0.clone() - b.0.clone())
        == (c.1.clone() - b.1.clone()) * (b.0.clone() - a.0.clone())
}

fn lerp<S: Scalar>(p: &(S, S), q: &(S, S), x: &S) -> S {
    p.1.clone() + (x.clone() - p.0.clone()) * (q.1.clone() - p.1.clone()) / (q.0.clone() - p.0.clone())
}

/// Streaming canonicalizer: drops a pending node whenever it turns out to be
/// collinear with its neighbours.
struct NodeSink<S> {
    out: Vec<(S, S)>,
}

impl<S: Scalar> NodeSink<S> {
    fn with_capacity(n: usize) -> Self {
        NodeSink {
            out: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, p: (S, S)) {
        let n = self.out.len();
        if n >= 2 && collinear(&self.out[n - 2], &self.out[n - 1], &p) {
            self.out[n - 1] = p;
        } else {
            self.out.push(p);
        }
    }

    fn finish(self) -> PlMap<S> {
        PlMap {
            nodes: self.out.into(),
        }
    }
}

impl<S: Scalar> PlMap<S> {
    pub fn identity() -> Self {
        PlMap {
            nodes: vec![(S::zero(), S::zero()), (S::one(), S::one())].into(),
        }
    }

    /// Validates a node list and returns its canonical form.
    pub fn from_nodes(nodes: Vec<(S, S)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidMap(format!(
                "need at least the nodes (0,0) and (1,1), got {} node(s)",
                nodes.len()
            )));
        }
        let first = &nodes[0];
        if !first.0.is_zero() || !first.1.is_zero() {
            return Err(Error::InvalidMap(format!(
                "node 0 is ({}, {}), expected (0, 0)",
                first.0, first.1
            )));
        }
        let last = nodes.last().unwrap();
        if !last.0.is_one() || !last.1.is_one() {
            return Err(Error::InvalidMap(format!(
                "node {} is ({}, {}), expected (1, 1)",
                nodes.len() - 1,
                last.0,
                last.1
            )));
        }
        for (i, w) in nodes.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidMap(format!(
                    "node {} ({}, {}): x-coordinate does not increase",
                    i + 1,
                    w[1].0,
                    w[1].1
                )));
            }
            if w[1].1 <= w[0].1 {
                return Err(Error::InvalidMap(format!(
                    "node {} ({}, {}): y-coordinate does not increase",
                    i + 1,
                    w[1].0,
                    w[1].1
                )));
            }
        }
        let mut sink = NodeSink::with_capacity(nodes.len());
        for p in nodes {
            sink.push(p);
        }
        Ok(sink.finish())
    }

    /// Convenience constructor from `(numer, denom)` pairs; panics on invalid input.
    pub fn from_ratios(nodes: &[((i64, i64), (i64, i64))]) -> Self {
        Self::from_nodes(
            nodes
                .iter()
                .map(|&((a, b), (c, d))| (S::from_ratio(a, b), S::from_ratio(c, d)))
                .collect(),
        )
        .expect("valid node list")
    }

    pub fn nodes(&self) -> &[(S, S)] {
        &self.nodes
    }

    pub fn is_identity(&self) -> bool {
        self.nodes.len() == 2
    }

    /// Interior nodes; by canonicity these are exactly the breakpoints.
    pub fn breakpoints(&self) -> Vec<S> {
        self.nodes[1..self.nodes.len() - 1]
            .iter()
            .map(|p| p.0.clone())
            .collect()
    }

    pub fn evaluate(&self, x: &S) -> Result<S> {
        if *x < S::zero() || *x > S::one() {
            return Err(Error::Domain(x.to_string()));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &S) -> S {
        let n = self.nodes.len();
        let i = self.nodes.partition_point(|p| p.0 <= *x);
        if i == 0 {
            return self.nodes[0].1.clone();
        }
        let p = &self.nodes[i - 1];
        if p.0 == *x || i == n {
            return p.1.clone();
        }
        lerp(p, &self.nodes[i], x)
    }

    /// The preimage of `y`.
    pub(crate) fn eval_inverse(&self, y: &S) -> S {
        let n = self.nodes.len();
        let i = self.nodes.partition_point(|p| p.1 <= *y);
        if i == 0 {
            return self.nodes[0].0.clone();
        }
        let p = &self.nodes[i - 1];
        if p.1 == *y || i == n {
            return p.0.clone();
        }
        let q = &self.nodes[i];
        p.0.clone() + (y.clone() - p.1.clone()) * (q.0.clone() - p.0.clone()) / (q.1.clone() - p.1.clone())
    }

    /// `self` followed by `other`.
    pub fn compose(&self, other: &Self) -> Self {
        if other.is_identity() {
            return self.clone();
        }
        if self.is_identity() {
            return other.clone();
        }
        let f = &self.nodes;
        let g = &other.nodes;
        let mut sink = NodeSink::with_capacity(f.len() + g.len());
        sink.push((S::zero(), S::zero()));
        // Sweep the union of f's node images and g's node abscissae.
        let (mut i, mut j) = (1usize, 1usize);
        while i < f.len() && j < g.len() {
            let yf = &f[i].1;
            let xg = &g[j].0;
            match yf.cmp(xg) {
                Ordering::Less => {
                    let z = lerp(&g[j - 1], &g[j], yf);
                    sink.push((f[i].0.clone(), z));
                    i += 1;
                }
                Ordering::Greater => {
                    let p = &f[i - 1];
                    let q = &f[i];
                    let x = p.0.clone()
                        + (xg.clone() - p.1.clone()) * (q.0.clone() - p.0.clone())
                            / (q.1.clone() - p.1.clone());
                    sink.push((x, g[j].1.clone()));
                    j += 1;
                }
                Ordering::Equal => {
                    sink.push((f[i].0.clone(), g[j].1.clone()));
                    i += 1;
                    j += 1;
                }
            }
        }
        sink.finish()
    }

    pub fn inverse(&self) -> Self {
        PlMap {
            nodes: self
                .nodes
                .iter()
                .map(|(x, y)| (y.clone(), x.clone()))
                .collect::<Vec<_>>()
                .into(),
        }
    }

    pub fn pow(&self, n: i64) -> Self {
        let mut base = if n < 0 { self.inverse() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base);
            }
        }
        acc
    }

    /// `self^h = h⁻¹ · self · h`.
    pub fn conjugate(&self, h: &Self) -> Self {
        h.inverse().compose(self).compose(h)
    }

    /// `[self, b] = self⁻¹ b⁻¹ self b`.
    pub fn commutator(&self, b: &Self) -> Self {
        let ab = self.compose(b);
        let ba = b.compose(self);
        if ab == ba {
            return Self::identity();
        }
        ba.inverse().compose(&ab)
    }

    /// `[[self, k], k]`.
    pub fn double_commutator(&self, k: &Self) -> Self {
        self.commutator(k).commutator(k)
    }

    /// The mirror image `x ↦ 1 − (1 − x)·self`, i.e. conjugation by the
    /// orientation-reversing reflection. This is a group automorphism.
    pub fn reflect(&self) -> Self {
        PlMap {
            nodes: self
                .nodes
                .iter()
                .rev()
                .map(|(x, y)| (S::one() - x.clone(), S::one() - y.clone()))
                .collect::<Vec<_>>()
                .into(),
        }
    }

    pub fn affine_components(&self) -> AffineDecomposition<S> {
        let pieces = self
            .nodes
            .windows(2)
            .map(|w| {
                let slope = slope_of(&w[0], &w[1]);
                let intercept = w[0].1.clone() - slope.clone() * w[0].0.clone();
                AffinePiece {
                    interval: Interval::new_unchecked(w[0].0.clone(), w[1].0.clone()),
                    slope,
                    intercept,
                }
            })
            .collect();
        AffineDecomposition { pieces }
    }

    /// Right derivative at `x ∈ [0, 1)`.
    pub fn slope_right(&self, x: &S) -> S {
        let i = self.nodes.partition_point(|p| p.0 <= *x);
        let i = i.clamp(1, self.nodes.len() - 1);
        slope_of(&self.nodes[i - 1], &self.nodes[i])
    }

    /// Left derivative at `x ∈ (0, 1]`.
    pub fn slope_left(&self, x: &S) -> S {
        let i = self.nodes.partition_point(|p| p.0 < *x);
        let i = i.clamp(1, self.nodes.len() - 1);
        slope_of(&self.nodes[i - 1], &self.nodes[i])
    }

    /// Connected components of `{x : x·self ≠ x}`, left to right.
    pub fn orbitals(&self) -> Vec<MapOrbital<S>> {
        if self.is_identity() {
            return Vec::new();
        }
        // Points where x·f − x may vanish or change sign.
        let mut critical: Vec<S> = Vec::with_capacity(self.nodes.len() * 2);
        for w in self.nodes.windows(2) {
            let (p, q) = (&w[0], &w[1]);
            critical.push(p.0.clone());
            let d0 = p.1.clone() - p.0.clone();
            let d1 = q.1.clone() - q.0.clone();
            let s0 = d0.cmp(&S::zero());
            let s1 = d1.cmp(&S::zero());
            if s0 != Ordering::Equal && s1 != Ordering::Equal && s0 != s1 {
                let t = d0.clone() / (d0 - d1);
                critical.push(p.0.clone() + t * (q.0.clone() - p.0.clone()));
            }
        }
        critical.push(S::one());

        let mut out: Vec<MapOrbital<S>> = Vec::new();
        let mut open: Option<(S, Direction)> = None;
        for w in critical.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            let mid = S::midpoint(lo, hi);
            let sign = self.eval_unchecked(&mid).cmp(&mid);
            let lo_fixed = self.eval_unchecked(lo) == *lo;
            if lo_fixed {
                if let Some((start, dir)) = open.take() {
                    out.push(MapOrbital {
                        interval: Interval::new_unchecked(start, lo.clone()),
                        direction: dir,
                    });
                }
            }
            match sign {
                Ordering::Equal => {
                    debug_assert!(open.is_none());
                }
                s => {
                    if open.is_none() {
                        let dir = if s == Ordering::Greater {
                            Direction::Right
                        } else {
                            Direction::Left
                        };
                        open = Some((lo.clone(), dir));
                    }
                }
            }
        }
        if let Some((start, dir)) = open {
            out.push(MapOrbital {
                interval: Interval::new_unchecked(start, S::one()),
                direction: dir,
            });
        }
        out
    }

    pub fn orbital_intervals(&self) -> Vec<Interval<S>> {
        self.orbitals().into_iter().map(|o| o.interval).collect()
    }

    pub fn has_orbital(&self, a: &Interval<S>) -> bool {
        self.orbital_direction(a).is_some()
    }

    pub fn orbital_direction(&self, a: &Interval<S>) -> Option<Direction> {
        self.orbitals()
            .into_iter()
            .find(|o| o.interval == *a)
            .map(|o| o.direction)
    }

    /// `(leading, trailing)` slopes of the map on its orbital `a`.
    pub fn edge_slopes(&self, a: &Interval<S>) -> Result<(S, S)> {
        if !self.has_orbital(a) {
            return Err(Error::NotAnOrbital(a.left.to_string(), a.right.to_string()));
        }
        Ok((self.slope_right(&a.left), self.slope_left(&a.right)))
    }

    /// The left total order: compare right derivatives at the last point of
    /// agreement starting from 0.
    pub fn compare_left_order(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        let f = &self.nodes;
        let g = &other.nodes;
        let (mut i, mut j) = (1usize, 1usize);
        // Both agree on [0, x]; slopes are compared on the next sub-interval.
        loop {
            let sf = slope_of(&f[i - 1], &f[i]);
            let sg = slope_of(&g[j - 1], &g[j]);
            match sf.cmp(&sg) {
                Ordering::Equal => {}
                ord => return ord,
            }
            match f[i].0.cmp(&g[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
            if i == f.len() || j == g.len() {
                // Unreachable for distinct maps: they would agree everywhere.
                return f.len().cmp(&g.len());
            }
        }
    }

    /// The map agreeing with `self` on `a` and the identity elsewhere.
    pub fn project(&self, a: &Interval<S>) -> Result<Self> {
        if self.eval_unchecked(&a.left) != a.left || self.eval_unchecked(&a.right) != a.right {
            return Err(Error::NotInvariant(a.left.to_string(), a.right.to_string()));
        }
        let mut sink = NodeSink::with_capacity(self.nodes.len() + 4);
        sink.push((S::zero(), S::zero()));
        if !a.left.is_zero() {
            sink.push((a.left.clone(), a.left.clone()));
        }
        for p in self.nodes.iter() {
            if a.contains_point(&p.0) {
                sink.push(p.clone());
            }
        }
        if !a.right.is_one() {
            sink.push((a.right.clone(), a.right.clone()));
        }
        sink.push((S::one(), S::one()));
        Ok(sink.finish())
    }

    /// Closure of the support, as `[min, max]`, restricted to orbitals inside `within`.
    pub fn support_hull_in(&self, within: &Interval<S>) -> Option<(S, S)> {
        let inside: Vec<_> = self
            .orbitals()
            .into_iter()
            .filter(|o| within.contains(&o.interval))
            .collect();
        let first = inside.first()?;
        let last = inside.last()?;
        Some((first.interval.left.clone(), last.interval.right.clone()))
    }

    /// Number of nodes in the canonical form.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

impl<S: Scalar> PartialOrd for PlMap<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Maps are totally ordered by the left total order.
impl<S: Scalar> Ord for PlMap<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.compare_left_order(other)
    }
}

impl<S: fmt::Debug> fmt::Debug for PlMap<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PlMap[")?;
        for (i, (x, y)) in self.nodes.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({x:?}, {y:?})")?;
        }
        write!(f, "]")
    }
}

// Serialization: `[["0","0"],["1/2","1/4"],...,["1","1"]]`.

pub(crate) struct RatStr<'a, S>(pub &'a S);

impl<S: Scalar> Serialize for RatStr<'_, S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        s.collect_str(self.0)
    }
}

pub(crate) fn parse_scalar<S: Scalar, E: de::Error>(s: &str) -> std::result::Result<S, E> {
    S::parse_exact(s).ok_or_else(|| E::custom(format!("malformed rational {s:?}")))
}

impl<S: Scalar> Serialize for PlMap<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        let mut seq = s.serialize_seq(Some(self.nodes.len()))?;
        for (x, y) in self.nodes.iter() {
            seq.serialize_element(&(RatStr(x), RatStr(y)))?;
        }
        seq.end()
    }
}

impl<'de, S: Scalar> Deserialize<'de> for PlMap<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V<S>(std::marker::PhantomData<S>);
        impl<'de, S: Scalar> Visitor<'de> for V<S> {
            type Value = PlMap<S>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a list of [\"p/q\", \"p/q\"] node pairs")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Self::Value, A::Error> {
                let mut nodes = Vec::new();
                while let Some((x, y)) = seq.next_element::<(String, String)>()? {
                    let idx = nodes.len();
                    let x: S = S::parse_exact(&x).ok_or_else(|| {
                        de::Error::custom(format!("node {idx}: malformed rational {x:?}"))
                    })?;
                    let y: S = S::parse_exact(&y).ok_or_else(|| {
                        de::Error::custom(format!("node {idx}: malformed rational {y:?}"))
                    })?;
                    nodes.push((x, y));
                }
                PlMap::from_nodes(nodes).map_err(de::Error::custom)
            }
        }
        d.deserialize_seq(V(std::marker::PhantomData))
    }
}

impl<S: Scalar> Serialize for Interval<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&RatStr(&self.left))?;
        t.serialize_element(&RatStr(&self.right))?;
        t.end()
    }
}

impl<'de, S: Scalar> Deserialize<'de> for Interval<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (a, b) = <(String, String)>::deserialize(d)?;
        let a: S = parse_scalar(&a)?;
        let b: S = parse_scalar(&b)?;
        Interval::new(a, b).map_err(de::Error::custom)
    }
}

impl<S: Scalar> Serialize for MapOrbital<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("MapOrbital", 2)?;
        st.serialize_field("interval", &self.interval)?;
        st.serialize_field("direction", &self.direction)?;
        st.end()
    }
}
