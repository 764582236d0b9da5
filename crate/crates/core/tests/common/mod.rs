#![allow(dead_code)]

use pltower::wreath::bump_on;
use pltower::{Interval, PlMap, Rat, RatInterval, RatMap, Scalar};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// A dyadic rational strictly inside (0, 1) with denominator at most 2^bits.
pub fn dyadic<S: Scalar>(rng: &mut ChaCha8Rng, bits: u32) -> S {
    let den = 1i64 << bits;
    S::from_ratio(rng.gen_range(1..den), den)
}

/// `n` distinct sorted dyadics in (0, 1).
fn distinct_dyadics<S: Scalar>(rng: &mut ChaCha8Rng, n: usize, bits: u32) -> Vec<S> {
    let den = 1i64 << bits;
    let mut pool: Vec<i64> = (1..den).collect();
    pool.shuffle(rng);
    let mut picked: Vec<i64> = pool.into_iter().take(n).collect();
    picked.sort_unstable();
    picked.into_iter().map(|k| S::from_ratio(k, den)).collect()
}

/// A random map with at most `max_nodes` nodes and dyadic coordinates.
pub fn random_map<S: Scalar>(rng: &mut ChaCha8Rng, max_nodes: usize) -> PlMap<S> {
    let interior = rng.gen_range(0..=max_nodes - 2);
    let bits = rng.gen_range(3..=8);
    let xs = distinct_dyadics::<S>(rng, interior, bits);
    let ys = distinct_dyadics::<S>(rng, interior, bits);
    let mut nodes = vec![(S::zero(), S::zero())];
    nodes.extend(xs.into_iter().zip(ys));
    nodes.push((S::one(), S::one()));
    PlMap::from_nodes(nodes).expect("sorted distinct coordinates")
}

pub fn random_rat_map(rng: &mut ChaCha8Rng, max_nodes: usize) -> RatMap {
    random_map(rng, max_nodes)
}

pub fn random_interval(rng: &mut ChaCha8Rng, bits: u32) -> RatInterval {
    let v = distinct_dyadics::<Rat>(rng, 2, bits);
    Interval::new(v[0].clone(), v[1].clone()).unwrap()
}

/// A random subinterval whose closure lies inside `within`.
pub fn inner_interval(rng: &mut ChaCha8Rng, within: &RatInterval) -> RatInterval {
    let w = within.length();
    let a: Rat = dyadic(rng, 5);
    let b: Rat = dyadic(rng, 5);
    let (a, b) = if a < b { (a, b) } else if b < a { (b, a) } else { (a, b + Rat::new(1, 64)) };
    let (a, b) = (a.min(Rat::new(62, 64)), b.min(Rat::new(63, 64)));
    let lo = within.left().clone() + w.clone() * a;
    let hi = within.left().clone() + w * b;
    Interval::new(lo, hi).unwrap()
}

/// A bump raised to a random nonzero power in `[-2, 2]`.
pub fn random_bump(rng: &mut ChaCha8Rng, a: &RatInterval) -> RatMap {
    let e = *[-2i64, -1, 1, 2].choose(rng).unwrap();
    bump_on(a).pow(e)
}

pub fn r(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

pub fn iv(a: (i64, i64), b: (i64, i64)) -> RatInterval {
    Interval::new(r(a.0, a.1), r(b.0, b.1)).unwrap()
}
