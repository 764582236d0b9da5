//! Geometry of finitely generated subgroups: group orbitals, movers,
//! transition chains and end realization.

use std::cmp::Ordering;
use std::fmt;

use indexmap::IndexMap;
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{enumerate_bounded, Budget, Caps, Elem};
use crate::pl::{Direction, Interval, MapOrbital, PlMap};
use crate::scalar::Scalar;

/// A finite generating set with named generators, in input order.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupSpec<S> {
    names: Vec<String>,
    maps: Vec<PlMap<S>>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name != "1"
        && !name.chars().any(|c| c.is_whitespace() || c == '^' || c == '"')
}

impl<S: Scalar> GroupSpec<S> {
    pub fn new(generators: Vec<(String, PlMap<S>)>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidGroup("at least one generator is required".into()));
        }
        let mut names = Vec::with_capacity(generators.len());
        let mut maps = Vec::with_capacity(generators.len());
        for (name, map) in generators {
            if !valid_name(&name) {
                return Err(Error::InvalidGroup(format!("bad generator name {name:?}")));
            }
            if names.contains(&name) {
                return Err(Error::InvalidGroup(format!("duplicate generator name {name:?}")));
            }
            names.push(name);
            maps.push(map);
        }
        Ok(GroupSpec { names, maps })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn maps(&self) -> &[PlMap<S>] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn generator(&self, name: &str) -> Option<&PlMap<S>> {
        self.names.iter().position(|n| n == name).map(|i| &self.maps[i])
    }

    pub fn evaluate(&self, w: &Word) -> PlMap<S> {
        w.evaluate(&self.maps)
    }

    pub fn render(&self, w: &Word) -> String {
        w.render(&self.names)
    }

    pub fn parse_word(&self, s: &str) -> Result<Word> {
        Word::parse(s, &self.names)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("group serialization is infallible")
    }
}

impl<S: fmt::Debug> fmt::Debug for GroupSpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.names.iter().zip(self.maps.iter()))
            .finish()
    }
}

impl<S: Scalar> Serialize for GroupSpec<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        let mut m = s.serialize_map(Some(self.maps.len()))?;
        for (n, f) in self.names.iter().zip(self.maps.iter()) {
            m.serialize_entry(n, f)?;
        }
        m.end()
    }
}

impl<'de, S: Scalar> Deserialize<'de> for GroupSpec<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V<S>(std::marker::PhantomData<S>);
        impl<'de, S: Scalar> Visitor<'de> for V<S> {
            type Value = GroupSpec<S>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object mapping generator names to node lists")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Self::Value, A::Error> {
                let mut gens: IndexMap<String, PlMap<S>> = IndexMap::new();
                while let Some(name) = access.next_key::<String>()? {
                    if gens.contains_key(&name) {
                        return Err(de::Error::custom(format!("duplicate generator name {name:?}")));
                    }
                    let map = access.next_value::<PlMap<S>>().map_err(|e| {
                        de::Error::custom(format!("generator {name:?}: {e}"))
                    })?;
                    gens.insert(name, map);
                }
                GroupSpec::new(gens.into_iter().collect()).map_err(de::Error::custom)
            }
        }
        d.deserialize_map(V(std::marker::PhantomData))
    }
}

/// A group word as runs of `(generator index, nonzero exponent)`; adjacent
/// runs use distinct generators.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Word {
    runs: Vec<(usize, i64)>,
}

impl Word {
    pub fn identity() -> Self {
        Word::default()
    }

    pub fn generator(index: usize) -> Self {
        Word::letter(index, 1)
    }

    pub fn letter(index: usize, exp: i64) -> Self {
        let mut w = Word::default();
        w.push(index, exp);
        w
    }

    /// Builds a word from runs, merging and cancelling adjacent runs.
    pub fn from_runs(runs: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut w = Word::default();
        for (g, e) in runs {
            w.push(g, e);
        }
        w
    }

    pub fn runs(&self) -> &[(usize, i64)] {
        &self.runs
    }

    /// Number of letters, counting `g^e` as `|e|` letters.
    pub fn len(&self) -> usize {
        self.runs.iter().map(|r| r.1.unsigned_abs() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn push(&mut self, index: usize, exp: i64) {
        if exp == 0 {
            return;
        }
        match self.runs.last_mut() {
            Some(last) if last.0 == index => {
                last.1 += exp;
                if last.1 == 0 {
                    self.runs.pop();
                }
            }
            _ => self.runs.push((index, exp)),
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &(g, e) in &other.runs {
            w.push(g, e);
        }
        w
    }

    pub fn inverse(&self) -> Word {
        Word {
            runs: self.runs.iter().rev().map(|&(g, e)| (g, -e)).collect(),
        }
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut w = Word::identity();
        for _ in 0..n.unsigned_abs() {
            w = w.concat(&base);
        }
        w
    }

    /// `by⁻¹ · self · by`.
    pub fn conjugate(&self, by: &Word) -> Word {
        by.inverse().concat(self).concat(by)
    }

    /// `self⁻¹ b⁻¹ self b`.
    pub fn commutator(&self, b: &Word) -> Word {
        self.inverse().concat(&b.inverse()).concat(self).concat(b)
    }

    /// Maps the generator indices through `f`.
    pub fn relabel(&self, f: impl Fn(usize) -> usize) -> Word {
        Word::from_runs(self.runs.iter().map(|&(g, e)| (f(g), e)))
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.runs.iter().map(|r| r.0).max()
    }

    pub fn evaluate<S: Scalar>(&self, gens: &[PlMap<S>]) -> PlMap<S> {
        self.runs
            .iter()
            .fold(PlMap::identity(), |acc, &(g, e)| acc.compose(&gens[g].pow(e)))
    }

    fn letters(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.runs
            .iter()
            .flat_map(|&(g, e)| std::iter::repeat_n((g, e < 0), e.unsigned_abs() as usize))
    }

    /// Shortlex order with letters ordered `g0, g0⁻¹, g1, g1⁻¹, …`.
    pub fn cmp_shortlex(&self, other: &Word) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.letters().cmp(other.letters()))
    }

    /// Renders as e.g. `x1 x0^-1 x0^3`; the identity renders as `1`.
    pub fn render(&self, names: &[String]) -> String {
        if self.runs.is_empty() {
            return "1".to_string();
        }
        self.runs
            .iter()
            .map(|&(g, e)| {
                let name = names.get(g).map(String::as_str).unwrap_or("?");
                if e == 1 {
                    name.to_string()
                } else {
                    format!("{name}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn parse(s: &str, names: &[String]) -> Result<Word> {
        let s = s.trim();
        if s == "1" || s.is_empty() {
            return Ok(Word::identity());
        }
        let mut w = Word::identity();
        for tok in s.split_whitespace() {
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => {
                    let e: i64 = e
                        .parse()
                        .map_err(|_| Error::InvalidWord(format!("bad exponent in {tok:?}")))?;
                    (n, e)
                }
                None => (tok, 1),
            };
            let g = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::InvalidWord(format!("unknown generator {name:?}")))?;
            w.push(g, exp);
        }
        Ok(w)
    }
}

/// A signed orbital `(A, g)`, optionally with the word that produced `g`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SignedOrbital<S> {
    pub orbital: Interval<S>,
    pub signature: PlMap<S>,
    pub witness: Option<Word>,
}

impl<S: Scalar> SignedOrbital<S> {
    pub fn new(orbital: Interval<S>, signature: PlMap<S>, witness: Option<Word>) -> Result<Self> {
        if !signature.has_orbital(&orbital) {
            return Err(Error::NotAnOrbital(orbital.left().to_string(), orbital.right().to_string()));
        }
        Ok(SignedOrbital {
            orbital,
            signature,
            witness,
        })
    }

    pub fn direction(&self) -> Direction {
        self.signature
            .orbital_direction(&self.orbital)
            .expect("signature has the orbital")
    }
}

/// Two signed orbitals `(a1, a2)` and `(b1, b2)` with `a1 < b1 < a2 < b2`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransitionChainWitness<S> {
    pub first: SignedOrbital<S>,
    pub second: SignedOrbital<S>,
}

impl<S: Scalar> TransitionChainWitness<S> {
    pub fn new(first: SignedOrbital<S>, second: SignedOrbital<S>) -> Result<Self> {
        let (a, b) = (&first.orbital, &second.orbital);
        if !(a.left() < b.left() && b.left() < a.right() && a.right() < b.right()) {
            return Err(Error::InvalidWitness(format!("{a} and {b} do not interleave")));
        }
        Ok(TransitionChainWitness { first, second })
    }

    /// The interval spanned by the chain.
    pub fn span(&self) -> Interval<S> {
        Interval::new_unchecked(self.first.orbital.left().clone(), self.second.orbital.right().clone())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum RealizationTag {
    NoEnd,
    LeadingOnly,
    TrailingOnly,
    ConsistentBoth,
    InconsistentBoth,
}

/// How a single element realizes the ends of an interval, with the orbitals
/// doing the realizing.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RealizationClass<S> {
    pub tag: RealizationTag,
    pub leading: Option<MapOrbital<S>>,
    pub trailing: Option<MapOrbital<S>>,
}

/// An element of the group together with the group orbital against which it
/// was classified.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RealizationWitness<S> {
    pub word: Word,
    pub map: PlMap<S>,
    pub orbital: Interval<S>,
    pub class: RealizationClass<S>,
}

/// Orbitals of the group generated by `maps`: components of the union of
/// their supports.
pub fn orbitals_of_maps<S: Scalar>(maps: &[PlMap<S>]) -> Vec<Interval<S>> {
    let mut all: Vec<Interval<S>> = maps.iter().flat_map(|m| m.orbital_intervals()).collect();
    all.sort();
    let mut out: Vec<Interval<S>> = Vec::new();
    for iv in all {
        match out.last_mut() {
            Some(last) if iv.left() < last.right() => {
                if iv.right() > last.right() {
                    *last = Interval::new_unchecked(last.left().clone(), iv.right().clone());
                }
            }
            _ => out.push(iv),
        }
    }
    out
}

pub fn group_orbitals<S: Scalar>(g: &GroupSpec<S>) -> Vec<Interval<S>> {
    orbitals_of_maps(g.maps())
}

/// The group orbital containing `x`, if any.
pub fn orbital_containing<S: Scalar>(maps: &[PlMap<S>], x: &S) -> Option<Interval<S>> {
    orbitals_of_maps(maps).into_iter().find(|o| o.contains_point(x))
}

/// A product `g1^m1 g2^m2 … gn^mn` of generator powers with `c·g > d`.
///
/// Requires `c <= d`, both inside one group orbital of `maps`.
pub(crate) fn mover_word<S: Scalar>(
    maps: &[PlMap<S>],
    c: &S,
    d: &S,
    budget: &mut Budget,
) -> Result<Word> {
    let orbs: Vec<(usize, MapOrbital<S>)> = maps
        .iter()
        .enumerate()
        .flat_map(|(i, m)| m.orbitals().into_iter().map(move |o| (i, o)))
        .collect();
    let mut cover: Vec<&(usize, MapOrbital<S>)> = Vec::new();
    let mut cur = c.clone();
    loop {
        let best = orbs
            .iter()
            .filter(|(_, o)| o.interval.contains_point(&cur))
            .max_by(|a, b| {
                a.1.interval
                    .right()
                    .cmp(b.1.interval.right())
                    .then_with(|| b.0.cmp(&a.0))
            })
            .ok_or_else(|| Error::Precondition(format!("{cur} is fixed by every generator")))?;
        cover.push(best);
        if best.1.interval.right() > d {
            break;
        }
        cur = best.1.interval.right().clone();
    }
    let mut x = c.clone();
    let mut word = Word::identity();
    for (i, (g, o)) in cover.iter().enumerate() {
        let sign = if o.direction == Direction::Right { 1 } else { -1 };
        let step = maps[*g].pow(sign);
        let target = match cover.get(i + 1) {
            Some(next) => next.1.interval.left().clone(),
            None => d.clone(),
        };
        let mut m = 0i64;
        while x <= target {
            budget.spend(1)?;
            x = step.eval_unchecked(&x);
            m += 1;
        }
        word.push(*g, sign * m);
    }
    Ok(word)
}

/// Finds `g` in the group with `c·g > d`, as a product of generator powers.
pub fn find_mover<S: Scalar>(g: &GroupSpec<S>, a: &Interval<S>, c: &S, d: &S) -> Result<(Word, PlMap<S>)> {
    if !group_orbitals(g).contains(a) {
        return Err(Error::Precondition(format!("{a} is not an orbital of the group")));
    }
    if !(a.contains_point(c) && a.contains_point(d)) || c >= d {
        return Err(Error::InvalidInterval(c.to_string(), d.to_string()));
    }
    let mut budget = Budget::new(Caps::default().max_compositions);
    let word = mover_word(g.maps(), c, d, &mut budget)?;
    let map = g.evaluate(&word);
    debug_assert!(map.eval_unchecked(c) > *d);
    Ok((word, map))
}

/// Classifies how `h` realizes the ends of `a`.
pub fn classify_realization<S: Scalar>(h: &PlMap<S>, a: &Interval<S>) -> Result<RealizationClass<S>> {
    let mut inside = Vec::new();
    for o in h.orbitals() {
        if a.contains(&o.interval) {
            inside.push(o);
        } else if a.overlaps(&o.interval) {
            return Err(Error::Straddle(
                o.interval.left().to_string(),
                o.interval.right().to_string(),
                a.left().to_string(),
                a.right().to_string(),
            ));
        }
    }
    let leading = inside.first().filter(|o| o.interval.left() == a.left()).cloned();
    let trailing = inside.last().filter(|o| o.interval.right() == a.right()).cloned();
    let tag = match (&leading, &trailing) {
        (None, None) => RealizationTag::NoEnd,
        (Some(_), None) => RealizationTag::LeadingOnly,
        (None, Some(_)) => RealizationTag::TrailingOnly,
        (Some(l), Some(t)) if l.direction == t.direction => RealizationTag::ConsistentBoth,
        (Some(_), Some(_)) => RealizationTag::InconsistentBoth,
    };
    Ok(RealizationClass { tag, leading, trailing })
}

/// First element (in enumeration order) realizing a group orbital with a tag
/// accepted by `want`.
pub(crate) fn realization_in<S: Scalar>(
    orbitals: &[Interval<S>],
    elements: &[Elem<S>],
    want: impl Fn(RealizationTag) -> bool,
) -> Option<RealizationWitness<S>> {
    for e in elements {
        if e.map.is_identity() {
            continue;
        }
        for a in orbitals {
            if let Ok(class) = classify_realization(&e.map, a) {
                if want(class.tag) {
                    return Some(RealizationWitness {
                        word: e.word.clone(),
                        map: e.map.clone(),
                        orbital: a.clone(),
                        class,
                    });
                }
            }
        }
    }
    None
}

fn is_one_end(t: RealizationTag) -> bool {
    matches!(t, RealizationTag::LeadingOnly | RealizationTag::TrailingOnly)
}

/// An element realizing exactly one end of a group orbital, among words of
/// length at most `l`.
pub fn imbalance_search<S: Scalar>(g: &GroupSpec<S>, l: usize) -> Option<RealizationWitness<S>> {
    let en = enumerate_bounded(g, l, Caps::default().max_elements);
    realization_in(&group_orbitals(g), &en.elements, is_one_end)
}

pub(crate) fn imbalance_in<S: Scalar>(orbitals: &[Interval<S>], elements: &[Elem<S>]) -> Option<RealizationWitness<S>> {
    realization_in(orbitals, elements, is_one_end)
}

/// An element realizing both ends of a group orbital in opposite directions.
pub fn inconsistent_search<S: Scalar>(g: &GroupSpec<S>, l: usize) -> Option<RealizationWitness<S>> {
    let en = enumerate_bounded(g, l, Caps::default().max_elements);
    inconsistent_in(&group_orbitals(g), &en.elements)
}

pub(crate) fn inconsistent_in<S: Scalar>(orbitals: &[Interval<S>], elements: &[Elem<S>]) -> Option<RealizationWitness<S>> {
    realization_in(orbitals, elements, |t| t == RealizationTag::InconsistentBoth)
}

/// Signed orbitals with pairwise distinct orbitals, keeping the first
/// signature met for each.
pub(crate) fn distinct_orbitals<S: Scalar>(elements: &[Elem<S>]) -> Vec<SignedOrbital<S>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for e in elements {
        for o in e.map.orbitals() {
            if seen.insert(o.interval.clone()) {
                out.push(SignedOrbital {
                    orbital: o.interval,
                    signature: e.map.clone(),
                    witness: Some(e.word.clone()),
                });
            }
        }
    }
    out
}

/// Searches signed orbitals for an interleaved pair `a1 < b1 < a2 < b2`.
pub(crate) fn transition_chain_in<S: Scalar>(elements: &[Elem<S>]) -> Option<TransitionChainWitness<S>> {
    let mut sos = distinct_orbitals(elements);
    sos.sort_by(|a, b| a.orbital.cmp(&b.orbital));
    let n = sos.len();
    if n < 2 {
        return None;
    }
    // Sparse table over indices, keyed by right end (ties: smaller index).
    let better = |i: usize, j: usize| -> usize {
        if sos[j].orbital.right() > sos[i].orbital.right() {
            j
        } else {
            i
        }
    };
    let mut table: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut width = 1;
    while 2 * width <= n {
        let prev = table.last().unwrap();
        let row: Vec<usize> = (0..=n - 2 * width)
            .map(|i| better(prev[i], prev[i + width]))
            .collect();
        table.push(row);
        width *= 2;
    }
    let query = |lo: usize, hi: usize| -> usize {
        let k = (usize::BITS - 1 - (hi - lo + 1).leading_zeros()) as usize;
        better(table[k][lo], table[k][hi + 1 - (1 << k)])
    };
    for (i, first) in sos.iter().enumerate() {
        let lo = sos.partition_point(|s| s.orbital.left() <= first.orbital.left());
        let hi = sos.partition_point(|s| s.orbital.left() < first.orbital.right());
        if lo >= hi {
            continue;
        }
        let j = query(lo, hi - 1);
        if sos[j].orbital.right() > first.orbital.right() {
            return Some(TransitionChainWitness {
                first: sos[i].clone(),
                second: sos[j].clone(),
            });
        }
    }
    None
}

/// A transition chain of length two among signatures given by words of
/// length at most `l`. `None` only means none was found up to `l`.
pub fn detect_transition_chain<S: Scalar>(g: &GroupSpec<S>, l: usize) -> Option<TransitionChainWitness<S>> {
    let en = enumerate_bounded(g, l, Caps::default().max_elements);
    transition_chain_in(&en.elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::f_generators;
    use crate::wreath::bump_on;
    use crate::{Rat, RatMap};

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    fn iv(a: (i64, i64), b: (i64, i64)) -> Interval<Rat> {
        Interval::new(r(a.0, a.1), r(b.0, b.1)).unwrap()
    }

    fn bump(a: (i64, i64), b: (i64, i64)) -> RatMap {
        bump_on(&iv(a, b))
    }

    fn group(maps: Vec<RatMap>) -> GroupSpec<Rat> {
        GroupSpec::new(maps.into_iter().enumerate().map(|(i, m)| (format!("g{i}"), m)).collect()).unwrap()
    }

    fn f2() -> GroupSpec<Rat> {
        f_generators(2).unwrap()
    }

    #[test]
    fn group_orbital_examples() {
        assert!(group(vec![RatMap::identity()]).maps().len() == 1);
        assert!(group_orbitals(&group(vec![RatMap::identity()])).is_empty());
        assert_eq!(group_orbitals(&f2()), vec![Interval::unit()]);
        let g = group(vec![bump((1, 8), (1, 4)), bump((1, 2), (3, 4))]);
        assert_eq!(group_orbitals(&g), vec![iv((1, 8), (1, 4)), iv((1, 2), (3, 4))]);
        // touching supports stay separate: the shared point is fixed
        let g = group(vec![bump((1, 8), (1, 4)), bump((1, 4), (3, 4))]);
        assert_eq!(group_orbitals(&g).len(), 2);
    }

    #[test]
    fn mover_single_generator() {
        let g = group(vec![bump((0, 1), (1, 1))]);
        let (w, m) = find_mover(&g, &Interval::unit(), &r(1, 8), &r(7, 8)).unwrap();
        assert_eq!(w.runs().len(), 1);
        assert!(w.runs()[0].1 > 0);
        assert!(m.evaluate(&r(1, 8)).unwrap() > r(7, 8));
        // one step fewer does not suffice
        let shorter = g.maps()[0].pow(w.runs()[0].1 - 1);
        assert!(shorter.evaluate(&r(1, 8)).unwrap() <= r(7, 8));
    }

    #[test]
    fn mover_greedy_cover() {
        let g = group(vec![bump((0, 1), (5, 8)), bump((3, 8), (1, 1))]);
        let (w, m) = find_mover(&g, &Interval::unit(), &r(1, 4), &r(3, 4)).unwrap();
        assert_eq!(w.runs().iter().map(|r| r.0).collect::<Vec<_>>(), vec![0, 1]);
        assert!(w.runs().iter().all(|r| r.1 > 0));
        assert!(m.evaluate(&r(1, 4)).unwrap() > r(3, 4));
        assert_eq!(g.render(&w).split(' ').count(), 2);
    }

    #[test]
    fn mover_rejects_points_outside() {
        let g = group(vec![bump((1, 4), (1, 2))]);
        let a = iv((1, 4), (1, 2));
        assert!(find_mover(&g, &a, &r(1, 8), &r(3, 8)).is_err());
        assert!(find_mover(&g, &a, &r(3, 8), &r(5, 16)).is_err());
        assert!(find_mover(&g, &Interval::unit(), &r(5, 16), &r(3, 8)).is_err());
    }

    #[test]
    fn transition_chain_examples() {
        let g = group(vec![bump((0, 1), (3, 4)), bump((1, 2), (1, 1))]);
        let w = detect_transition_chain(&g, 1).unwrap();
        assert_eq!(w.first.orbital, iv((0, 1), (3, 4)));
        assert_eq!(w.second.orbital, iv((1, 2), (1, 1)));
        let g = group(vec![bump((1, 4), (1, 2)), bump((1, 8), (3, 4))]);
        assert!(detect_transition_chain(&g, 1).is_none());
        let w = detect_transition_chain(&f2(), 2).unwrap();
        let (a, b) = (&w.first.orbital, &w.second.orbital);
        assert!(a.left() < b.left() && b.left() < a.right() && a.right() < b.right());
        assert!(w.first.witness.as_ref().unwrap().len() <= 2);
        assert!(w.second.witness.as_ref().unwrap().len() <= 2);
    }

    #[test]
    fn classify_examples() {
        let f = f2();
        let x1 = f.generator("x1").unwrap();
        let c = classify_realization(x1, &Interval::unit()).unwrap();
        assert_eq!(c.tag, RealizationTag::TrailingOnly);
        assert_eq!(c.trailing.unwrap().interval, iv((1, 2), (1, 1)));
        let c = classify_realization(&bump((1, 4), (1, 2)), &Interval::unit()).unwrap();
        assert_eq!(c.tag, RealizationTag::NoEnd);
        let h = bump((0, 1), (1, 4)).inverse().compose(&bump((1, 2), (1, 1)));
        let c = classify_realization(&h, &Interval::unit()).unwrap();
        assert_eq!(c.tag, RealizationTag::InconsistentBoth);
        let c = classify_realization(&bump((0, 1), (1, 1)), &Interval::unit()).unwrap();
        assert_eq!(c.tag, RealizationTag::ConsistentBoth);
        assert!(matches!(
            classify_realization(&bump((1, 4), (3, 4)), &iv((1, 2), (1, 1))),
            Err(Error::Straddle(..))
        ));
    }

    #[test]
    fn classify_stable_under_powers() {
        let h = bump((0, 1), (1, 4)).inverse().compose(&bump((1, 2), (1, 1)));
        for n in [-3, -1, 2, 5] {
            let c = classify_realization(&h.pow(n), &Interval::unit()).unwrap();
            assert_eq!(c.tag, RealizationTag::InconsistentBoth);
        }
    }

    #[test]
    fn imbalance_examples() {
        let w = imbalance_search(&f2(), 1).unwrap();
        assert_eq!(f2().render(&w.word), "x1");
        assert_eq!(w.orbital, Interval::unit());
        assert_eq!(w.class.tag, RealizationTag::TrailingOnly);
        assert!(imbalance_search(&group(vec![bump((0, 1), (1, 1))]), 3).is_none());
        assert!(imbalance_search(&group(vec![bump((1, 4), (1, 2))]), 3).is_none());
    }

    #[test]
    fn word_algebra_and_text() {
        let names: Vec<String> = vec!["a".into(), "b".into()];
        let w = Word::parse("a b^-2 a^3", &names).unwrap();
        assert_eq!(w.render(&names), "a b^-2 a^3");
        assert_eq!(w.len(), 6);
        assert!(w.concat(&w.inverse()).is_empty());
        assert_eq!(Word::parse("a a^-1", &names).unwrap(), Word::identity());
        assert!(Word::parse("c", &names).is_err());
        let c = Word::generator(0).commutator(&Word::generator(1));
        assert_eq!(c.render(&names), "a^-1 b^-1 a b");
        assert_eq!(Word::generator(0).cmp_shortlex(&Word::letter(0, -1)), Ordering::Less);
        assert_eq!(Word::letter(0, -1).cmp_shortlex(&Word::generator(1)), Ordering::Less);
    }

    #[test]
    fn group_json() {
        let text = f2().to_json();
        let back: GroupSpec<Rat> = GroupSpec::from_json(&text).unwrap();
        assert_eq!(back, f2());
        let dup = r#"{"a": [["0","0"],["1","1"]], "a": [["0","0"],["1","1"]]}"#;
        assert!(GroupSpec::<Rat>::from_json(dup).is_err());
        let bad = "{\"a\": [[\"0\",\"0\"],\n[\"1/2\",\"1/4\"],[\"1/4\",\"1/2\"],[\"1\",\"1\"]]}";
        let e = GroupSpec::<Rat>::from_json(bad).unwrap_err().to_string();
        assert!(e.contains("node 2") && e.contains("line"), "{e}");
    }
}
