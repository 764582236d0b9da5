//! Towers of signed orbitals: search, exemplary checks, derivation and the
//! constructive builders, all recorded as replayable certificates.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{
    classify_realization, group_orbitals, inconsistent_in, imbalance_in, mover_word, orbitals_of_maps,
    transition_chain_in, GroupSpec, RealizationTag, RealizationWitness, SignedOrbital,
    TransitionChainWitness, Word,
};
use crate::groups::{enumerate_bounded, Budget, Caps, Elem};
use crate::pl::{Direction, Interval, PlMap};
use crate::scalar::Scalar;

/// A chain of signed orbitals under proper inclusion, smallest first.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Tower<S> {
    levels: Vec<SignedOrbital<S>>,
}

impl<S: Scalar> Tower<S> {
    pub fn new(levels: Vec<SignedOrbital<S>>) -> Result<Self> {
        for (i, l) in levels.iter().enumerate() {
            if !l.signature.has_orbital(&l.orbital) {
                return Err(Error::InvalidTower(format!(
                    "level {i}: {} is not an orbital of its signature",
                    l.orbital
                )));
            }
        }
        for (i, w) in levels.windows(2).enumerate() {
            if !w[1].orbital.properly_contains(&w[0].orbital) {
                return Err(Error::InvalidTower(format!(
                    "level {} orbital {} does not properly contain level {i} orbital {}",
                    i + 1,
                    w[1].orbital,
                    w[0].orbital
                )));
            }
        }
        Ok(Tower { levels })
    }

    pub fn empty() -> Self {
        Tower { levels: Vec::new() }
    }

    pub fn levels(&self) -> &[SignedOrbital<S>] {
        &self.levels
    }

    pub fn height(&self) -> usize {
        self.levels.len()
    }

    pub fn orbitals(&self) -> Vec<Interval<S>> {
        self.levels.iter().map(|l| l.orbital.clone()).collect()
    }

    pub fn signatures(&self) -> Vec<PlMap<S>> {
        self.levels.iter().map(|l| l.signature.clone()).collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ViolationKind {
    /// An orbital of the lower signature contains an end of the upper orbital.
    ContainsEnd,
    /// An orbital of the lower signature inside the upper orbital shares an end with it.
    SharesEnd,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExemplaryViolation<S> {
    pub lower: usize,
    pub upper: usize,
    pub orbital: Interval<S>,
    pub kind: ViolationKind,
}

/// Checks both exemplary conditions over every pair of distinct levels and
/// reports the first violation found.
pub fn is_exemplary<S: Scalar>(t: &Tower<S>) -> std::result::Result<(), ExemplaryViolation<S>> {
    for (i, lower) in t.levels.iter().enumerate() {
        let orbs = lower.signature.orbital_intervals();
        for (j, upper) in t.levels.iter().enumerate().skip(i + 1) {
            let b = &upper.orbital;
            for o in &orbs {
                let kind = if o.contains_point(b.left()) || o.contains_point(b.right()) {
                    Some(ViolationKind::ContainsEnd)
                } else if b.contains(o) && o.shares_end_with(b) {
                    Some(ViolationKind::SharesEnd)
                } else {
                    None
                };
                if let Some(kind) = kind {
                    return Err(ExemplaryViolation {
                        lower: i,
                        upper: j,
                        orbital: o.clone(),
                        kind,
                    });
                }
            }
        }
    }
    Ok(())
}

/// `T^k = {(A·k, g^k)}`.
pub fn conjugate_tower<S: Scalar>(t: &Tower<S>, k: &PlMap<S>) -> Tower<S> {
    Tower {
        levels: t
            .levels
            .iter()
            .map(|l| SignedOrbital {
                orbital: l.orbital.image(k),
                signature: l.signature.conjugate(k),
                witness: None,
            })
            .collect(),
    }
}

/// Whether `[lo, hi]` lies in one fundamental domain `[x, x·g)` of `g` on its
/// orbital `a`, with `g` taken in the direction moving right on `a`.
pub fn fits_fundamental_domain<S: Scalar>(g: &PlMap<S>, a: &Interval<S>, lo: &S, hi: &S) -> Result<bool> {
    let dir = g
        .orbital_direction(a)
        .ok_or_else(|| Error::NotAnOrbital(a.left().to_string(), a.right().to_string()))?;
    if lo > hi || !a.contains_closed(lo, hi) {
        return Err(Error::InvalidInterval(lo.to_string(), hi.to_string()));
    }
    let image = match dir {
        Direction::Right => g.eval_unchecked(lo),
        Direction::Left => g.eval_inverse(lo),
    };
    Ok(image > *hi)
}

/// Every signed orbital of every element of word length at most `l`, in
/// enumeration order.
pub fn signed_orbitals_up_to<S: Scalar>(g: &GroupSpec<S>, l: usize) -> Vec<SignedOrbital<S>> {
    let en = enumerate_bounded(g, l, Caps::default().max_elements);
    signed_orbitals_of(&en.elements)
}

pub(crate) fn signed_orbitals_of<S: Scalar>(elements: &[Elem<S>]) -> Vec<SignedOrbital<S>> {
    elements
        .iter()
        .filter(|e| !e.map.is_identity())
        .flat_map(|e| {
            e.map.orbitals().into_iter().map(move |o| SignedOrbital {
                orbital: o.interval,
                signature: e.map.clone(),
                witness: Some(e.word.clone()),
            })
        })
        .collect()
}

struct FenwickMax {
    tree: Vec<usize>,
}

impl FenwickMax {
    fn new(n: usize) -> Self {
        FenwickMax { tree: vec![0; n + 1] }
    }

    fn update(&mut self, mut i: usize, v: usize) {
        i += 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].max(v);
            i += i & i.wrapping_neg();
        }
    }

    fn prefix_max(&self, mut i: usize) -> usize {
        i += 1;
        let mut m = 0;
        while i > 0 {
            m = m.max(self.tree[i]);
            i -= i & i.wrapping_neg();
        }
        m
    }
}

/// A longest chain of properly nested orbitals, one signature per orbital.
///
/// Each orbital keeps its least signature in the left total order. The chain
/// is chosen from the outside in, taking the least `(left, right)` orbital
/// available at each level.
pub fn max_tower<S: Scalar>(sos: &[SignedOrbital<S>]) -> Tower<S> {
    let mut best: HashMap<&Interval<S>, &SignedOrbital<S>> = HashMap::new();
    for so in sos {
        best.entry(&so.orbital)
            .and_modify(|cur| {
                if so.signature.compare_left_order(&cur.signature) == Ordering::Less {
                    *cur = so;
                }
            })
            .or_insert(so);
    }
    let mut items: Vec<&SignedOrbital<S>> = best.into_values().collect();
    if items.is_empty() {
        return Tower::empty();
    }
    // Inner intervals first: left descending, then right ascending.
    items.sort_by(|a, b| {
        b.orbital
            .left()
            .cmp(a.orbital.left())
            .then_with(|| a.orbital.right().cmp(b.orbital.right()))
    });
    let mut rights: Vec<&S> = items.iter().map(|s| s.orbital.right()).collect();
    rights.sort();
    rights.dedup();
    let rank = |x: &S| rights.binary_search(&x).expect("right end is indexed");
    let mut fw = FenwickMax::new(rights.len());
    let mut depth = vec![0usize; items.len()];
    for (i, so) in items.iter().enumerate() {
        let inner = fw.prefix_max(rank(so.orbital.right()));
        depth[i] = inner + 1;
        fw.update(rank(so.orbital.right()), depth[i]);
    }
    let height = *depth.iter().max().unwrap();
    let mut chain: Vec<SignedOrbital<S>> = Vec::with_capacity(height);
    let mut want = height;
    let mut outer: Option<&Interval<S>> = None;
    while want > 0 {
        let pick = (0..items.len())
            .filter(|&i| depth[i] == want)
            .filter(|&i| outer.is_none_or(|o| o.properly_contains(&items[i].orbital)))
            .min_by(|&i, &j| items[i].orbital.cmp(&items[j].orbital))
            .expect("a chain of every smaller length exists inside");
        chain.push(items[pick].clone());
        outer = Some(&items[pick].orbital);
        want -= 1;
    }
    chain.reverse();
    Tower { levels: chain }
}

// Straight-line programs.

#[derive(Clone, Debug, PartialEq, Eq)]
enum Op<S> {
    Gen(usize),
    Literal(PlMap<S>),
    /// Product of powers of earlier steps, left to right.
    Product(Vec<(usize, i64)>),
    /// `base^by = by⁻¹ base by`.
    Conjugate(usize, usize),
    Commutator(usize, usize),
}

fn pow_cost(e: i64) -> u64 {
    2 * (64 - e.unsigned_abs().leading_zeros() as u64)
}

/// A growing program whose every step is an element of the group generated
/// by `gens`.
pub(crate) struct Program<S> {
    gens: Vec<PlMap<S>>,
    ops: Vec<Op<S>>,
    notes: Vec<String>,
    maps: Vec<PlMap<S>>,
    gen_ids: HashMap<usize, usize>,
    budget: Budget,
}

impl<S: Scalar> Program<S> {
    fn new(gens: Vec<PlMap<S>>, budget: Budget) -> Self {
        Program {
            gens,
            ops: Vec::new(),
            notes: Vec::new(),
            maps: Vec::new(),
            gen_ids: HashMap::new(),
            budget,
        }
    }

    fn map(&self, id: usize) -> &PlMap<S> {
        &self.maps[id]
    }

    fn eval_op(&self, op: &Op<S>) -> PlMap<S> {
        match op {
            Op::Gen(i) => self.gens[*i].clone(),
            Op::Literal(m) => m.clone(),
            Op::Product(fs) => fs
                .iter()
                .fold(PlMap::identity(), |acc, &(id, e)| acc.compose(&self.maps[id].pow(e))),
            Op::Conjugate(a, b) => self.maps[*a].conjugate(&self.maps[*b]),
            Op::Commutator(a, b) => self.maps[*a].commutator(&self.maps[*b]),
        }
    }

    fn push(&mut self, op: Op<S>, note: impl Into<String>) -> Result<usize> {
        let cost = match &op {
            Op::Gen(_) | Op::Literal(_) => 0,
            Op::Product(fs) => fs.iter().map(|f| 1 + pow_cost(f.1)).sum(),
            Op::Conjugate(..) => 2,
            Op::Commutator(..) => 3,
        };
        self.budget.spend(cost)?;
        let map = self.eval_op(&op);
        self.ops.push(op);
        self.notes.push(note.into());
        self.maps.push(map);
        Ok(self.maps.len() - 1)
    }

    fn gen(&mut self, i: usize) -> Result<usize> {
        if let Some(&id) = self.gen_ids.get(&i) {
            return Ok(id);
        }
        let id = self.push(Op::Gen(i), format!("generator {i}"))?;
        self.gen_ids.insert(i, id);
        Ok(id)
    }

    fn product(&mut self, factors: Vec<(usize, i64)>, note: impl Into<String>) -> Result<usize> {
        if let [(id, 1)] = factors.as_slice() {
            return Ok(*id);
        }
        self.push(Op::Product(factors), note)
    }

    fn power(&mut self, id: usize, e: i64, note: impl Into<String>) -> Result<usize> {
        self.product(vec![(id, e)], note)
    }

    fn conjugate(&mut self, a: usize, by: usize, note: impl Into<String>) -> Result<usize> {
        self.push(Op::Conjugate(a, by), note)
    }

    fn commutator(&mut self, a: usize, b: usize, note: impl Into<String>) -> Result<usize> {
        self.push(Op::Commutator(a, b), note)
    }

    /// A word over `local` step ids.
    fn word_over(&mut self, w: &Word, local: &[usize], note: impl Into<String>) -> Result<usize> {
        let factors = w.runs().iter().map(|&(g, e)| (local[g], e)).collect();
        self.product(factors, note)
    }

    fn spend(&mut self, units: u64) -> Result<()> {
        self.budget.spend(units)
    }

    /// Replays `sub` inside `self`, sending its generator `j` to `local[j]`.
    /// Returns the id of every step of `sub` in `self`.
    fn splice(&mut self, sub: &Program<S>, local: &[usize]) -> Result<Vec<usize>> {
        let mut ids = Vec::with_capacity(sub.ops.len());
        for (op, note) in sub.ops.iter().zip(&sub.notes) {
            let id = match op {
                Op::Gen(j) => local[*j],
                Op::Literal(m) => self.push(Op::Literal(m.clone()), note.clone())?,
                Op::Product(fs) => {
                    self.push(Op::Product(fs.iter().map(|&(i, e)| (ids[i], e)).collect()), note.clone())?
                }
                Op::Conjugate(a, b) => self.push(Op::Conjugate(ids[*a], ids[*b]), note.clone())?,
                Op::Commutator(a, b) => self.push(Op::Commutator(ids[*a], ids[*b]), note.clone())?,
            };
            ids.push(id);
        }
        Ok(ids)
    }
}

/// Orbitals of `m` inside `a`, as the closed hull `[min, max]` of their union.
fn support_hull<S: Scalar>(m: &PlMap<S>, a: &Interval<S>) -> Option<(S, S)> {
    m.support_hull_in(a)
}

fn orbital_with_left<S: Scalar>(m: &PlMap<S>, left: &S) -> Option<Interval<S>> {
    m.orbital_intervals().into_iter().find(|o| o.left() == left)
}

type Levels<S> = Vec<(usize, Interval<S>)>;

/// Exemplary tower of height `k` from an element `g0` realizing exactly one
/// end of the orbital `a` of the group generated by `gens`.
fn imbalance_tower<S: Scalar>(
    p: &mut Program<S>,
    gens: &[usize],
    g0: usize,
    a: &Interval<S>,
    k: usize,
) -> Result<Levels<S>> {
    let class = classify_realization(p.map(g0), a)?;
    match class.tag {
        RealizationTag::TrailingOnly => imbalance_trailing(p, gens, g0, a, k),
        RealizationTag::LeadingOnly => {
            // Build in the mirror image, where the realized end is the right one,
            // then replay the same program on the original elements.
            let mut local: Vec<usize> = gens.to_vec();
            local.push(g0);
            let mirrored: Vec<PlMap<S>> = local.iter().map(|&id| p.map(id).reflect()).collect();
            let mut sub = Program::new(mirrored, p.budget);
            let sub_gens: Vec<usize> = (0..gens.len()).map(|i| sub.gen(i)).collect::<Result<_>>()?;
            let sub_g0 = sub.gen(gens.len())?;
            let levels = imbalance_trailing(&mut sub, &sub_gens, sub_g0, &a.reflect(), k)?;
            p.budget = sub.budget;
            let ids = p.splice(&sub, &local)?;
            Ok(levels.into_iter().map(|(id, o)| (ids[id], o.reflect())).collect())
        }
        tag => Err(Error::InvalidWitness(format!(
            "element realizes {tag:?} on {a}, not exactly one end"
        ))),
    }
}

fn imbalance_trailing<S: Scalar>(
    p: &mut Program<S>,
    gens: &[usize],
    g0: usize,
    a: &Interval<S>,
    k: usize,
) -> Result<Levels<S>> {
    let class = classify_realization(p.map(g0), a)?;
    let b0 = class
        .trailing
        .filter(|_| class.tag == RealizationTag::TrailingOnly)
        .ok_or_else(|| Error::InvalidWitness(format!("element does not realize only the right end of {a}")))?;
    let g0 = if b0.direction == Direction::Left {
        p.power(g0, -1, "invert the witness so it moves right on its trailing orbital")?
    } else {
        g0
    };
    let a0 = b0.interval.left().clone();
    let w = p
        .map(g0)
        .orbital_intervals()
        .into_iter()
        .find(|o| a.contains(o))
        .map(|o| o.left().clone())
        .expect("the trailing orbital lies in a");
    let maps: Vec<PlMap<S>> = gens.iter().map(|&id| p.map(id).clone()).collect();
    let alpha_word = mover_word(&maps, &w, &a0, &mut p.budget)?;
    let alpha = p.word_over(&alpha_word, gens, format!("alpha: moves {w} past {a0}"))?;
    let r = p.map(alpha).eval_unchecked(&w);
    debug_assert!(r > a0);
    let g_minus1 = p.conjugate(g0, alpha, "g(-1) = g0 conjugated by alpha")?;
    let alpha_inv = p.power(alpha, -1, "alpha inverse")?;

    let mut h = vec![g0];
    for j in 1..k {
        let prev = h[j - 1];
        h.push(p.conjugate(prev, alpha_inv, format!("g{j} = g{} conjugated by alpha^-1", j - 1))?);
    }
    let mut u = Vec::with_capacity(k);
    let mut c = Vec::with_capacity(k);
    for (j, &hj) in h.iter().enumerate() {
        let cj = p
            .map(hj)
            .orbital_intervals()
            .last()
            .map(|o| o.left().clone())
            .expect("conjugates keep the trailing orbital");
        let uj = p.product(vec![(hj, 1), (g_minus1, -1)], format!("u{j} = g{j} g(-1)^-1"))?;
        let cj_orb = orbital_with_left(p.map(uj), &cj)
            .ok_or_else(|| Error::Degenerate(format!("u{j} has no orbital starting at {cj}")))?;
        u.push(uj);
        c.push(cj_orb);
    }

    let mut levels: Levels<S> = vec![(u[0], c[0].clone())];
    for j in 1..k {
        let (prev, _) = &levels[j - 1];
        let (lo, hi) = support_hull(p.map(*prev), a).expect("nontrivial level");
        if c[j].left() >= &lo {
            return Err(Error::Degenerate(format!("left ends are not nested at level {j}")));
        }
        let hj = p.map(h[j]).clone();
        let mut x = c[j].right().clone();
        let mut m = 0i64;
        while x <= hi || m == 0 {
            p.spend(1)?;
            x = hj.eval_unchecked(&x);
            m += 1;
        }
        let hm = p.power(h[j], m, format!("m{j} = {m}"))?;
        let vj = p.conjugate(u[j], hm, format!("v{j} = u{j} conjugated by g{j}^{m}"))?;
        let dj = Interval::new_unchecked(c[j].left().clone(), x);
        levels.push((vj, dj));
    }
    Ok(levels)
}

/// Exemplary tower of height `k` from `h` realizing both ends of `a` in
/// opposite directions.
fn inconsistent_tower<S: Scalar>(
    p: &mut Program<S>,
    gens: &[usize],
    h: usize,
    a: &Interval<S>,
    k: usize,
) -> Result<Levels<S>> {
    let class = classify_realization(p.map(h), a)?;
    let (lead, trail) = match (class.tag, class.leading, class.trailing) {
        (RealizationTag::InconsistentBoth, Some(l), Some(t)) => (l, t),
        (tag, ..) => {
            return Err(Error::InvalidWitness(format!(
                "element realizes {tag:?} on {a}, not both ends inconsistently"
            )))
        }
    };
    let h = if lead.direction == Direction::Right {
        p.power(h, -1, "invert h so it moves left on its first orbital")?
    } else {
        h
    };
    let r = lead.interval.right().clone();
    let s = trail.interval.left().clone();
    let maps: Vec<PlMap<S>> = gens.iter().map(|&id| p.map(id).clone()).collect();
    let g_word = mover_word(&maps, &r, &s, &mut p.budget)?;
    let g = p.word_over(&g_word, gens, format!("g: moves r = {r} past s = {s}"))?;
    let t = p.map(g).eval_unchecked(&r);
    let u = p.map(g).eval_unchecked(&s);
    let hmap = p.map(h).clone();
    let mut x = t.clone();
    let mut kexp = 0i64;
    while x <= u || kexp == 0 {
        p.spend(1)?;
        x = hmap.eval_unchecked(&x);
        kexp += 1;
    }
    let g0 = p.product(
        vec![(h, -kexp), (g, 1), (h, kexp), (g, -1)],
        format!("g0 = h^-{kexp} g h^{kexp} g^-1"),
    )?;
    let b0 = p
        .map(g0)
        .orbital_intervals()
        .into_iter()
        .find(|o| o.contains_closed(&r, &s))
        .ok_or_else(|| Error::Degenerate(format!("g0 does not move [{r}, {s}] off itself")))?;
    let mut levels: Levels<S> = vec![(g0, b0)];
    for i in 1..k {
        let (prev, b_prev) = levels[i - 1].clone();
        let (lo, hi) = support_hull(p.map(prev), a).expect("nontrivial level");
        let (mut pl, mut pr) = (b_prev.left().clone(), b_prev.right().clone());
        let mut n = 0i64;
        while !(pl < lo && pr > hi) || n == 0 {
            p.spend(2)?;
            pl = hmap.eval_unchecked(&pl);
            pr = hmap.eval_unchecked(&pr);
            n += 1;
        }
        let hn = p.power(h, n, format!("n{i} = {n}"))?;
        let gi = p.conjugate(prev, hn, format!("g{i} = g{} conjugated by h^{n}", i - 1))?;
        levels.push((gi, Interval::new_unchecked(pl, pr)));
    }
    Ok(levels)
}

/// Closed components of the fixed set of `m` strictly inside `o`.
fn fixed_components<S: Scalar>(m: &PlMap<S>, o: &Interval<S>) -> Vec<(S, S)> {
    let orbs: Vec<Interval<S>> = m.orbital_intervals().into_iter().filter(|i| o.contains(i)).collect();
    orbs.windows(2)
        .map(|w| (w[0].right().clone(), w[1].left().clone()))
        .collect()
}

/// Exemplary tower of height `k` from a transition chain `(A1, g)`, `(A2, h)`.
fn transition_tower<S: Scalar>(p: &mut Program<S>, g: usize, h: usize, k: usize) -> Result<Levels<S>> {
    let (gm, hm) = (p.map(g).clone(), p.map(h).clone());
    let span_left = gm
        .orbital_intervals()
        .into_iter()
        .chain(hm.orbital_intervals())
        .map(|o| o.left().clone())
        .min()
        .ok_or_else(|| Error::InvalidWitness("trivial chain".into()))?;
    let o = orbitals_of_maps(&[gm.clone(), hm.clone()])
        .into_iter()
        .find(|o| o.contains_point(&span_left) || o.left() == &span_left)
        .expect("orbital of the chain");
    let (e, f) = if gm.orbital_intervals().iter().any(|i| i.left() == o.left()) {
        (g, h)
    } else {
        (h, g)
    };
    let class = classify_realization(p.map(e), &o)?;
    match class.tag {
        RealizationTag::LeadingOnly | RealizationTag::TrailingOnly => return imbalance_tower(p, &[e, f], e, &o, k),
        RealizationTag::InconsistentBoth => return inconsistent_tower(p, &[e, f], e, &o, k),
        RealizationTag::NoEnd => {
            return Err(Error::InvalidWitness(format!("neither element realizes the left end of {o}")))
        }
        RealizationTag::ConsistentBoth => {}
    }
    let e = if class.leading.as_ref().unwrap().direction == Direction::Left {
        p.power(e, -1, "invert so both end orbitals move right")?
    } else {
        e
    };
    let emap = p.map(e).clone();
    let fixed = fixed_components(&emap, &o);
    let (min_f, max_f) = match (fixed.first(), fixed.last()) {
        (Some(a), Some(b)) => (a.0.clone(), b.1.clone()),
        _ => return Err(Error::Degenerate("realizing element has no fixed set inside the orbital".into())),
    };
    // Search n = 1, -1, 2, -2, … for k = [e, f^n] moving the fixed set and realizing no end.
    let fmap = p.map(f).clone();
    let mut n_found = None;
    for step in 1.. {
        let n: i64 = if step % 2 == 1 { (step + 1) / 2 } else { -(step / 2) };
        p.spend(3 + pow_cost(n))?;
        let kc = emap.commutator(&fmap.pow(n));
        let clean = matches!(classify_realization(&kc, &o), Ok(c) if c.tag == RealizationTag::NoEnd);
        let orbs = kc.orbital_intervals();
        let covers = fixed
            .iter()
            .all(|(lo, hi)| orbs.iter().any(|i| i.contains_closed(lo, hi)));
        if clean && covers {
            n_found = Some(n);
            break;
        }
    }
    let n = n_found.expect("loop exits only by success or budget");
    let fpow = p.power(f, n, format!("n = {n}"))?;
    let kc = p.commutator(e, fpow, format!("k = [g, h^{n}]"))?;
    let x1 = S::midpoint(o.left(), &min_f);
    let y1 = S::midpoint(&max_f, o.right());
    let qmaps = vec![emap.clone(), p.map(kc).clone()];
    let qword = mover_word(&qmaps, &x1, &y1, &mut p.budget)?;
    let total: i64 = qword.runs().iter().filter(|r| r.0 == 0).map(|r| r.1).sum();
    let mut factors: Vec<(usize, i64)> = qword
        .runs()
        .iter()
        .map(|&(i, ex)| (if i == 0 { e } else { kc }, ex))
        .collect();
    factors.push((e, -total));
    let q = p.product(factors, format!("q = q' g^{}", -total))?;
    let qm = p.map(q).clone();
    let c = qm
        .orbital_intervals()
        .into_iter()
        .find(|i| i.contains_point(&x1))
        .ok_or_else(|| Error::Degenerate("q fixes x1".into()))?;
    if !c.contains_closed(&min_f, &max_f) {
        return Err(Error::Degenerate("q does not carry the fixed set in one orbital".into()));
    }
    let (x2, y2) = support_hull(&qm, &o).expect("q is nontrivial on the orbital");
    let (a3, b3) = (c.left().clone(), c.right().clone());
    let (mut x, mut y) = (x2, b3.clone());
    let mut i = 0i64;
    while !(a3 < x && x < b3 && y > y2) || i == 0 {
        p.spend(2)?;
        x = emap.eval_unchecked(&x);
        y = emap.eval_unchecked(&y);
        i += 1;
    }
    let ei = p.power(e, i, format!("i = {i}"))?;
    let pp = p.conjugate(q, ei, format!("p = q conjugated by g^{i}"))?;
    let a34 = orbitals_of_maps(&[qm, p.map(pp).clone()])
        .into_iter()
        .find(|i| i.left() == &a3)
        .ok_or_else(|| Error::Degenerate("<q, p> has no orbital at a3".into()))?;
    imbalance_tower(p, &[q, pp], q, &a34, k)
}

/// How a builder is seeded.
#[derive(Clone, Debug)]
pub enum BuildMode<S> {
    Imbalance(RealizationWitness<S>),
    Inconsistent(RealizationWitness<S>),
    TransitionChain(TransitionChainWitness<S>),
}

// Certificates.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", bound = "S: Scalar")]
pub enum StepOp<S> {
    Generator { name: String },
    Literal { nodes: PlMap<S> },
    Product { factors: Vec<(usize, i64)> },
    Conjugate { base: usize, by: usize },
    Commutator { a: usize, b: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CertStep<S> {
    #[serde(flatten)]
    pub op: StepOp<S>,
    pub note: String,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CertLevel<S> {
    pub orbital: Interval<S>,
    pub step: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
    pub signature: PlMap<S>,
}

/// A tower together with the program that constructs its signatures.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TowerCertificate<S> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpec<S>>,
    pub steps: Vec<CertStep<S>>,
    pub levels: Vec<CertLevel<S>>,
    pub claims_exemplary: bool,
}

pub fn map_digest<S: Scalar>(m: &PlMap<S>) -> String {
    let text = serde_json::to_string(m).expect("map serialization is infallible");
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn step_words<S: Scalar>(ops: &[Op<S>]) -> Vec<Option<Word>> {
    let mut words: Vec<Option<Word>> = Vec::with_capacity(ops.len());
    for op in ops {
        let w = match op {
            Op::Gen(i) => Some(Word::generator(*i)),
            Op::Literal(_) => None,
            Op::Product(fs) => fs.iter().try_fold(Word::identity(), |acc, &(id, e)| {
                words[id].as_ref().map(|w| acc.concat(&w.pow(e)))
            }),
            Op::Conjugate(a, b) => match (&words[*a], &words[*b]) {
                (Some(x), Some(y)) => Some(x.conjugate(y)),
                _ => None,
            },
            Op::Commutator(a, b) => match (&words[*a], &words[*b]) {
                (Some(x), Some(y)) => Some(x.commutator(y)),
                _ => None,
            },
        };
        words.push(w);
    }
    words
}

impl<S: Scalar> TowerCertificate<S> {
    fn from_program(
        group: Option<&GroupSpec<S>>,
        p: &Program<S>,
        levels: &[(usize, Interval<S>)],
        claims_exemplary: bool,
    ) -> Self {
        let words = step_words(&p.ops);
        let steps = p
            .ops
            .iter()
            .zip(&p.notes)
            .zip(&p.maps)
            .map(|((op, note), map)| CertStep {
                op: match op {
                    Op::Gen(i) => StepOp::Generator {
                        name: group.map(|g| g.names()[*i].clone()).unwrap_or_else(|| format!("g{i}")),
                    },
                    Op::Literal(m) => StepOp::Literal { nodes: m.clone() },
                    Op::Product(fs) => StepOp::Product { factors: fs.clone() },
                    Op::Conjugate(a, b) => StepOp::Conjugate { base: *a, by: *b },
                    Op::Commutator(a, b) => StepOp::Commutator { a: *a, b: *b },
                },
                note: note.clone(),
                digest: map_digest(map),
            })
            .collect();
        let levels = levels
            .iter()
            .map(|(id, o)| CertLevel {
                orbital: o.clone(),
                step: *id,
                word: group.and_then(|g| words[*id].as_ref().map(|w| g.render(w))),
                signature: p.maps[*id].clone(),
            })
            .collect();
        TowerCertificate {
            group: group.cloned(),
            steps,
            levels,
            claims_exemplary,
        }
    }

    pub fn height(&self) -> usize {
        self.levels.len()
    }

    /// The tower as recorded, without replaying the program.
    pub fn tower(&self) -> Result<Tower<S>> {
        let levels = self
            .levels
            .iter()
            .map(|l| {
                let witness = match (&self.group, &l.word) {
                    (Some(g), Some(w)) => Some(g.parse_word(w)?),
                    _ => None,
                };
                Ok(SignedOrbital {
                    orbital: l.orbital.clone(),
                    signature: l.signature.clone(),
                    witness,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Tower::new(levels)
    }

    /// Replays every step, checks each digest, and re-checks the tower.
    pub fn verify(&self) -> Result<Tower<S>> {
        let mut maps: Vec<PlMap<S>> = Vec::with_capacity(self.steps.len());
        for (i, step) in self.steps.iter().enumerate() {
            let back = |j: usize| -> Result<&PlMap<S>> {
                maps.get(j).ok_or_else(|| Error::Mismatch {
                    step: i,
                    reason: format!("refers to step {j}, which is not earlier"),
                })
            };
            let m = match &step.op {
                StepOp::Generator { name } => self
                    .group
                    .as_ref()
                    .and_then(|g| g.generator(name))
                    .cloned()
                    .ok_or_else(|| Error::Mismatch {
                        step: i,
                        reason: format!("unknown generator {name:?}"),
                    })?,
                StepOp::Literal { nodes } => nodes.clone(),
                StepOp::Product { factors } => {
                    let mut acc = PlMap::identity();
                    for &(j, e) in factors {
                        acc = acc.compose(&back(j)?.pow(e));
                    }
                    acc
                }
                StepOp::Conjugate { base, by } => back(*base)?.conjugate(back(*by)?),
                StepOp::Commutator { a, b } => back(*a)?.commutator(back(*b)?),
            };
            let digest = map_digest(&m);
            if digest != step.digest {
                return Err(Error::Mismatch {
                    step: i,
                    reason: format!("digest {} does not match recorded {}", digest, step.digest),
                });
            }
            maps.push(m);
        }
        for (i, l) in self.levels.iter().enumerate() {
            let m = maps
                .get(l.step)
                .ok_or_else(|| Error::Verification(format!("level {i} refers to missing step {}", l.step)))?;
            if *m != l.signature {
                return Err(Error::Verification(format!("level {i}: signature differs from step {}", l.step)));
            }
            if let (Some(g), Some(w)) = (&self.group, &l.word) {
                if g.evaluate(&g.parse_word(w)?) != *m {
                    return Err(Error::Verification(format!("level {i}: word does not evaluate to the signature")));
                }
            }
        }
        let tower = self.tower().map_err(|e| Error::Verification(e.to_string()))?;
        if self.claims_exemplary {
            if let Err(v) = is_exemplary(&tower) {
                return Err(Error::Verification(format!(
                    "claimed exemplary, but level {} orbital {} {:?} of level {}",
                    v.lower, v.orbital, v.kind, v.upper
                )));
            }
        }
        Ok(tower)
    }

    fn program(&self) -> Result<(Program<S>, Levels<S>)> {
        let gens: Vec<PlMap<S>> = self.group.as_ref().map(|g| g.maps().to_vec()).unwrap_or_default();
        let mut p = Program::new(gens, Budget::new(Caps::default().max_compositions));
        for step in &self.steps {
            let op = match &step.op {
                StepOp::Generator { name } => {
                    let i = self
                        .group
                        .as_ref()
                        .and_then(|g| g.names().iter().position(|n| n == name))
                        .ok_or_else(|| Error::Verification(format!("unknown generator {name:?}")))?;
                    Op::Gen(i)
                }
                StepOp::Literal { nodes } => Op::Literal(nodes.clone()),
                StepOp::Product { factors } => Op::Product(factors.clone()),
                StepOp::Conjugate { base, by } => Op::Conjugate(*base, *by),
                StepOp::Commutator { a, b } => Op::Commutator(*a, *b),
            };
            if let Op::Gen(i) = op {
                p.gen_ids.insert(i, p.maps.len());
            }
            p.ops.push(op);
            p.notes.push(step.note.clone());
        }
        p.maps = Vec::with_capacity(p.ops.len());
        for i in 0..p.ops.len() {
            let m = p.eval_op(&p.ops[i].clone());
            p.maps.push(m);
        }
        let levels = self.levels.iter().map(|l| (l.step, l.orbital.clone())).collect();
        Ok((p, levels))
    }

    /// One derivation step applied to this certificate's tower, extending its
    /// program so that new signatures stay words in the same generators.
    pub fn derive(&self) -> Result<TowerCertificate<S>> {
        self.verify()?;
        let (mut p, levels) = self.program()?;
        let out = derive_levels(&mut p, &levels)?;
        let cert = TowerCertificate::from_program(self.group.as_ref(), &p, &out, true);
        let tower = cert.tower()?;
        let exemplary = is_exemplary(&tower).is_ok();
        Ok(TowerCertificate {
            claims_exemplary: exemplary,
            ..cert
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn derive_levels<S: Scalar>(p: &mut Program<S>, levels: &[(usize, Interval<S>)]) -> Result<Levels<S>> {
    if levels.len() < 2 {
        return Err(Error::InvalidTower("derivation needs height at least 2".into()));
    }
    let tower = Tower::new(
        levels
            .iter()
            .map(|(id, o)| SignedOrbital {
                orbital: o.clone(),
                signature: p.map(*id).clone(),
                witness: None,
            })
            .collect(),
    )?;
    if let Err(v) = is_exemplary(&tower) {
        return Err(Error::InvalidTower(format!(
            "not exemplary: level {} orbital {} against level {}",
            v.lower, v.orbital, v.upper
        )));
    }
    let mut g = Vec::with_capacity(levels.len());
    for (i, (id, o)) in levels.iter().enumerate() {
        let dir = p.map(*id).orbital_direction(o).expect("checked by Tower::new");
        g.push(if dir == Direction::Left {
            p.power(*id, -1, format!("level {i} inverted to move right"))?
        } else {
            *id
        });
    }
    let mut h = vec![g[0]];
    for i in 1..levels.len() {
        let a = &levels[i].1;
        let (lo, hi) = support_hull(p.map(g[i - 1]), a).expect("lower signature moves points of a");
        let gm = p.map(g[i]).clone();
        let mut x = lo;
        let mut n = 0i64;
        while x <= hi {
            p.spend(1)?;
            x = gm.eval_unchecked(&x);
            n += 1;
        }
        let n = n.max(1);
        h.push(p.power(g[i], n, format!("n{} = {n}", i + 1))?);
    }
    let mut out = Vec::with_capacity(levels.len() - 1);
    for i in 0..levels.len() - 1 {
        let v = p.commutator(h[i], h[i + 1], format!("v{} = [h{}, h{}]", i + 1, i + 1, i + 2))?;
        let a = &levels[i].1;
        if !p.map(v).has_orbital(a) {
            return Err(Error::Verification(format!("{a} is not an orbital of v{}", i + 1)));
        }
        out.push((v, a.clone()));
    }
    Ok(out)
}

/// The tower `{(A_i, [h_i, h_(i+1)])}` of height one less, for an exemplary tower.
pub fn derive_tower<S: Scalar>(t: &Tower<S>) -> Result<TowerCertificate<S>> {
    let mut p = Program::new(Vec::new(), Budget::new(Caps::default().max_compositions));
    let mut levels = Vec::with_capacity(t.height());
    for (i, l) in t.levels().iter().enumerate() {
        let id = p.push(Op::Literal(l.signature.clone()), format!("level {i} signature"))?;
        levels.push((id, l.orbital.clone()));
    }
    let out = derive_levels(&mut p, &levels)?;
    let cert = TowerCertificate::from_program(None, &p, &out, false);
    let exemplary = is_exemplary(&cert.tower()?).is_ok();
    Ok(TowerCertificate {
        claims_exemplary: exemplary,
        ..cert
    })
}

/// A certificate whose levels are given by words in the group's generators.
pub fn certify_tower<S: Scalar>(g: &GroupSpec<S>, t: &Tower<S>) -> Result<TowerCertificate<S>> {
    let mut p = Program::new(g.maps().to_vec(), Budget::new(Caps::default().max_compositions));
    let gens: Vec<usize> = (0..g.len()).map(|i| p.gen(i)).collect::<Result<_>>()?;
    let mut levels = Vec::with_capacity(t.height());
    for (i, l) in t.levels().iter().enumerate() {
        let id = match &l.witness {
            Some(w) if g.evaluate(w) == l.signature => p.word_over(w, &gens, format!("level {i}"))?,
            _ => p.push(Op::Literal(l.signature.clone()), format!("level {i} signature"))?,
        };
        levels.push((id, l.orbital.clone()));
    }
    let claims = is_exemplary(t).is_ok();
    Ok(TowerCertificate::from_program(Some(g), &p, &levels, claims))
}

fn witness_element<S: Scalar>(
    p: &mut Program<S>,
    g: &GroupSpec<S>,
    gens: &[usize],
    w: &Option<Word>,
    sig: &PlMap<S>,
    what: &str,
) -> Result<usize> {
    match w {
        Some(w) => {
            if g.evaluate(w) != *sig {
                return Err(Error::InvalidWitness(format!("{what}: word does not evaluate to its signature")));
            }
            p.word_over(w, gens, format!("{what}: {}", g.render(w)))
        }
        None => p.push(Op::Literal(sig.clone()), format!("{what}: literal signature")),
    }
}

/// Builds an exemplary tower of height exactly `k` from a witness, with all
/// orbitals inside the witness's group orbital.
pub fn build_exemplary_tower<S: Scalar>(g: &GroupSpec<S>, mode: &BuildMode<S>, k: usize) -> Result<TowerCertificate<S>> {
    build_exemplary_tower_with(g, mode, k, &Caps::default())
}

pub fn build_exemplary_tower_with<S: Scalar>(
    g: &GroupSpec<S>,
    mode: &BuildMode<S>,
    k: usize,
    caps: &Caps,
) -> Result<TowerCertificate<S>> {
    if k == 0 {
        return Err(Error::Precondition("requested height must be at least 1".into()));
    }
    let mut p = Program::new(g.maps().to_vec(), Budget::new(caps.max_compositions));
    let gens: Vec<usize> = (0..g.len()).map(|i| p.gen(i)).collect::<Result<_>>()?;
    let orbitals = group_orbitals(g);
    let (levels, ambient) = match mode {
        BuildMode::Imbalance(w) | BuildMode::Inconsistent(w) => {
            if !orbitals.contains(&w.orbital) {
                return Err(Error::InvalidWitness(format!("{} is not an orbital of the group", w.orbital)));
            }
            let id = witness_element(&mut p, g, &gens, &Some(w.word.clone()), &w.map, "witness")?;
            let levels = match mode {
                BuildMode::Imbalance(_) => imbalance_tower(&mut p, &gens, id, &w.orbital, k)?,
                _ => inconsistent_tower(&mut p, &gens, id, &w.orbital, k)?,
            };
            (levels, w.orbital.clone())
        }
        BuildMode::TransitionChain(w) => {
            let w = TransitionChainWitness::new(w.first.clone(), w.second.clone())?;
            for so in [&w.first, &w.second] {
                if !so.signature.has_orbital(&so.orbital) {
                    return Err(Error::InvalidWitness(format!("{} is not an orbital of its signature", so.orbital)));
                }
            }
            let span = w.span();
            let ambient = orbitals
                .iter()
                .find(|o| o.contains(&span))
                .cloned()
                .expect("a chain lies in one group orbital");
            let a = witness_element(&mut p, g, &gens, &w.first.witness, &w.first.signature, "first")?;
            let b = witness_element(&mut p, g, &gens, &w.second.witness, &w.second.signature, "second")?;
            (transition_tower(&mut p, a, b, k)?, ambient)
        }
    };
    let cert = TowerCertificate::from_program(Some(g), &p, &levels, true);
    let tower = cert.verify()?;
    if tower.height() != k {
        return Err(Error::Verification(format!("built height {} instead of {k}", tower.height())));
    }
    if let Some(o) = tower.orbitals().iter().find(|o| !ambient.contains(o)) {
        return Err(Error::Verification(format!("orbital {o} leaves {ambient}")));
    }
    Ok(cert)
}

/// Best certified tower height from words of length at most `l`, pushed to
/// `k_target` by a builder when a witness turns up.
pub fn depth_lower_bound<S: Scalar>(
    g: &GroupSpec<S>,
    l: usize,
    k_target: Option<usize>,
) -> Result<(usize, TowerCertificate<S>)> {
    depth_lower_bound_with(g, l, k_target, &Caps::default())
}

pub fn depth_lower_bound_with<S: Scalar>(
    g: &GroupSpec<S>,
    l: usize,
    k_target: Option<usize>,
    caps: &Caps,
) -> Result<(usize, TowerCertificate<S>)> {
    let en = enumerate_bounded(g, l, caps.max_elements);
    depth_from_elements(g, &en.elements, k_target, caps)
}

pub(crate) fn witness_modes<S: Scalar>(g: &GroupSpec<S>, elements: &[Elem<S>]) -> Vec<BuildMode<S>> {
    let orbitals = group_orbitals(g);
    let mut modes = Vec::new();
    if let Some(w) = imbalance_in(&orbitals, elements) {
        modes.push(BuildMode::Imbalance(w));
    }
    if let Some(w) = inconsistent_in(&orbitals, elements) {
        modes.push(BuildMode::Inconsistent(w));
    }
    if let Some(w) = transition_chain_in(elements) {
        modes.push(BuildMode::TransitionChain(w));
    }
    modes
}

pub(crate) fn depth_from_elements<S: Scalar>(
    g: &GroupSpec<S>,
    elements: &[Elem<S>],
    k_target: Option<usize>,
    caps: &Caps,
) -> Result<(usize, TowerCertificate<S>)> {
    let tower = max_tower(&signed_orbitals_of(elements));
    if let Some(k) = k_target.filter(|&k| k > tower.height()) {
        for mode in witness_modes(g, elements) {
            if let Ok(cert) = build_exemplary_tower_with(g, &mode, k, caps) {
                return Ok((k, cert));
            }
        }
    }
    let cert = certify_tower(g, &tower)?;
    cert.verify()?;
    Ok((tower.height(), cert))
}
