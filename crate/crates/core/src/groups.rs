//! Word enumeration, derived-series sampling, Thompson generators and the
//! combined analysis report.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    group_orbitals, imbalance_in, inconsistent_in, transition_chain_in, GroupSpec, RealizationTag,
    RealizationWitness, SignedOrbital, Word,
};
use crate::pl::{Interval, PlMap};
use crate::scalar::Scalar;
use crate::towers::{depth_from_elements, max_tower, signed_orbitals_of, TowerCertificate};
use crate::wreath::rescale_into;

/// Search limits shared by every bounded computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    pub max_word_length: usize,
    pub max_elements: usize,
    pub max_commutators: usize,
    pub max_compositions: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_word_length: 8,
            max_elements: 50_000,
            max_commutators: 200_000,
            max_compositions: 1 << 20,
        }
    }
}

/// A countdown of composition-sized work units.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    left: u64,
    limit: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { left: limit, limit }
    }

    pub fn spend(&mut self, units: u64) -> Result<()> {
        if units > self.left {
            self.left = 0;
            return Err(Error::resource("compositions per build", self.limit));
        }
        self.left -= units;
        Ok(())
    }

    pub fn used(&self) -> u64 {
        self.limit - self.left
    }
}

/// A group element with a shortest witnessing word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Elem<S> {
    pub word: Word,
    pub map: PlMap<S>,
}

/// Result of a bounded enumeration. When `truncated` is set, every element of
/// length at most `complete_length` is present but longer ones may be missing.
#[derive(Clone, Debug)]
pub struct Enumeration<S> {
    pub elements: Vec<Elem<S>>,
    pub complete_length: usize,
    pub truncated: bool,
}

/// Breadth-first enumeration by word length, letters ordered
/// `g0, g0⁻¹, g1, g1⁻¹, …`, deduplicated by map. Stops once `max_elements`
/// distinct elements have been found.
pub fn enumerate_bounded<S: Scalar>(g: &GroupSpec<S>, l: usize, max_elements: usize) -> Enumeration<S> {
    let gens = g.maps();
    let letters: Vec<(usize, i64, PlMap<S>)> = gens
        .iter()
        .enumerate()
        .flat_map(|(i, m)| [(i, 1, m.clone()), (i, -1, m.inverse())])
        .collect();
    let mut seen: HashSet<PlMap<S>> = HashSet::new();
    seen.insert(PlMap::identity());
    let mut elements = vec![Elem {
        word: Word::identity(),
        map: PlMap::identity(),
    }];
    let mut frontier = 0..1;
    let mut complete_length = 0;
    for _len in 1..=l {
        let start = elements.len();
        for idx in frontier.clone() {
            let base = elements[idx].clone();
            let last = base.word.runs().last().copied();
            for (gi, e, m) in &letters {
                if let Some((lg, le)) = last {
                    if lg == *gi && le.signum() != *e {
                        continue;
                    }
                }
                let map = base.map.compose(m);
                if seen.contains(&map) {
                    continue;
                }
                if elements.len() >= max_elements {
                    return Enumeration {
                        elements,
                        complete_length,
                        truncated: true,
                    };
                }
                seen.insert(map.clone());
                let mut word = base.word.clone();
                word.push(*gi, *e);
                elements.push(Elem { word, map });
            }
        }
        frontier = start..elements.len();
        complete_length += 1;
        if frontier.is_empty() {
            complete_length = l;
            break;
        }
    }
    Enumeration {
        elements,
        complete_length,
        truncated: false,
    }
}

/// All distinct elements of word length at most `l`, each with its
/// shortlex-least word.
pub fn enumerate_elements<S: Scalar>(g: &GroupSpec<S>, l: usize) -> Result<Vec<Elem<S>>> {
    enumerate_elements_with(g, l, &Caps::default())
}

pub fn enumerate_elements_with<S: Scalar>(g: &GroupSpec<S>, l: usize, caps: &Caps) -> Result<Vec<Elem<S>>> {
    if l > caps.max_word_length {
        return Err(Error::resource("word length", caps.max_word_length as u64));
    }
    let en = enumerate_bounded(g, l, caps.max_elements);
    if en.truncated {
        return Err(Error::resource("enumerated elements", caps.max_elements as u64));
    }
    Ok(en.elements)
}

/// One level of a sampled derived series.
#[derive(Clone, Debug)]
pub struct DerivedLevel<S> {
    pub level: usize,
    pub elements: Vec<Elem<S>>,
    pub truncated: bool,
}

impl<S> DerivedLevel<S> {
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Distinct nontrivial commutators `[e_p, e_q]`, `p < q`, visiting pairs in
/// order of `q` so that early (short) elements are paired first.
fn commutators_of<S: Scalar>(base: &[Elem<S>], cap: usize) -> (Vec<Elem<S>>, bool) {
    let mut seen: HashSet<PlMap<S>> = HashSet::new();
    let mut out = Vec::new();
    let mut visited = 0usize;
    for q in 1..base.len() {
        for p in 0..q {
            if visited == cap {
                return (out, true);
            }
            visited += 1;
            let c = base[p].map.commutator(&base[q].map);
            if c.is_identity() || !seen.insert(c.clone()) {
                continue;
            }
            out.push(Elem {
                word: base[p].word.commutator(&base[q].word),
                map: c,
            });
        }
    }
    (out, false)
}

/// Samples `G', G'', …` up to `max_level` from the elements of length at
/// most `l`. Caps truncate rather than fail; the flag records it.
pub fn derived_series_sample<S: Scalar>(
    g: &GroupSpec<S>,
    max_level: usize,
    l: usize,
    caps: &Caps,
) -> Vec<DerivedLevel<S>> {
    let en = enumerate_bounded(g, l, caps.max_elements);
    let mut truncated = en.truncated;
    let mut base: Vec<Elem<S>> = en.elements.into_iter().filter(|e| !e.map.is_identity()).collect();
    let mut out = Vec::new();
    for level in 1..=max_level {
        let (next, cut) = commutators_of(&base, caps.max_commutators);
        truncated |= cut;
        out.push(DerivedLevel {
            level,
            elements: next.clone(),
            truncated,
        });
        base = next;
    }
    out
}

pub fn derived_sample<S: Scalar>(g: &GroupSpec<S>, level: usize, l: usize) -> DerivedLevel<S> {
    derived_sample_with(g, level, l, &Caps::default())
}

pub fn derived_sample_with<S: Scalar>(g: &GroupSpec<S>, level: usize, l: usize, caps: &Caps) -> DerivedLevel<S> {
    derived_series_sample(g, level.max(1), l, caps)
        .pop()
        .expect("at least one level")
}

/// `x0` of the `F_n` family: identity on `[0, r/n]`, then a staircase with
/// slopes `1/n`, `1`, `n`.
fn f_base_generator<S: Scalar>(n: i64, r: i64) -> PlMap<S> {
    let q = |a: i64, b: i64| S::from_ratio(a, b);
    let mut dom: Vec<S> = Vec::new();
    let mut rng: Vec<S> = Vec::new();
    // Domain leaves: [j/n, (j+1)/n] for r ≤ j ≤ n−2, then n pieces of [(n−1)/n, 1].
    for j in r..=n - 2 {
        dom.push(q(j, n));
    }
    for i in 0..n {
        dom.push(q((n - 1) * n + i, n * n));
    }
    dom.push(S::one());
    // Range leaves: n pieces of [r/n, (r+1)/n], then [j/n, (j+1)/n] for r+1 ≤ j ≤ n−1.
    for i in 0..n {
        rng.push(q(r * n + i, n * n));
    }
    for j in r + 1..=n - 1 {
        rng.push(q(j, n));
    }
    rng.push(S::one());
    let mut nodes = vec![(S::zero(), S::zero())];
    nodes.extend(dom.into_iter().zip(rng));
    nodes.dedup_by(|a, b| a.0 == b.0);
    PlMap::from_nodes(nodes).expect("staircase nodes are monotone")
}

/// The standard generators `x0, …, x(n−1)` of Thompson's group `F_n`.
///
/// `x_r` for `r ≤ n−2` is supported on `[r/n, 1]`; `x(n−1)` is `x0` rescaled
/// into the last `1/n` of the interval. With the right action the relations
/// read `x_j x_i x_j⁻¹ = x_(i+n−1)` for `j < i`.
pub fn f_generators<S: Scalar>(n: i64) -> Result<GroupSpec<S>> {
    if n < 2 {
        return Err(Error::Domain(n.to_string()));
    }
    let mut gens: Vec<(String, PlMap<S>)> = (0..n - 1)
        .map(|r| (format!("x{r}"), f_base_generator(n, r)))
        .collect();
    let tail = Interval::new(S::from_ratio(n - 1, n), S::one())?;
    gens.push((format!("x{}", n - 1), rescale_into(&gens[0].1, &tail)));
    GroupSpec::new(gens)
}

/// `x_i` for any `i ≥ 0`: `x_(q(n−1)+r)` is `x_r` rescaled `q` times into the
/// last `1/n` of the interval.
pub fn f_generator_extended<S: Scalar>(n: i64, i: usize) -> Result<PlMap<S>> {
    if n < 2 {
        return Err(Error::Domain(n.to_string()));
    }
    let step = (n - 1) as usize;
    let (q, r) = (i / step, (i % step) as i64);
    let tail = Interval::new(S::from_ratio(n - 1, n), S::one())?;
    let mut m = f_base_generator::<S>(n, r);
    for _ in 0..q {
        m = rescale_into(&m, &tail);
    }
    Ok(m)
}

/// Inputs to [`analyze`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub max_word_length: usize,
    pub tower_height: Option<usize>,
    pub caps: Caps,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            max_word_length: 4,
            tower_height: None,
            caps: Caps::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Imbalance,
    TransitionChain,
    Inconsistent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    NonsolvableCertified { kind: CertificateKind },
    DerivedLengthAtLeast { n: usize },
    InconclusiveUpTo { max_word_length: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RealizationRecord<S> {
    pub word: String,
    pub signature: PlMap<S>,
    pub orbital: Interval<S>,
    pub tag: RealizationTag,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct OrbitalRecord<S> {
    pub orbital: Interval<S>,
    pub word: Option<String>,
    pub signature: PlMap<S>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ChainRecord<S> {
    pub first: OrbitalRecord<S>,
    pub second: OrbitalRecord<S>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedRecord {
    pub level: usize,
    pub nontrivial: bool,
    pub truncated: bool,
    pub witness: Option<String>,
}

/// Everything [`analyze`] found, with words rendered in the group's names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AnalysisReport<S> {
    pub config: AnalyzeConfig,
    pub orbitals: Vec<Interval<S>>,
    pub enumerated_elements: usize,
    pub enumeration_truncated: bool,
    pub transition_chain: Option<ChainRecord<S>>,
    pub imbalance: Option<RealizationRecord<S>>,
    pub inconsistent: Option<RealizationRecord<S>>,
    pub depth_lower_bound: usize,
    pub certificate: Option<TowerCertificate<S>>,
    pub derived_series: Vec<DerivedRecord>,
    /// Whether every derived level below the sampled tower height was found nontrivial.
    pub consistent: bool,
    pub verdict: Verdict,
}

impl<S: Scalar> AnalysisReport<S> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_markdown(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "# Analysis\n");
        let verdict = match self.verdict {
            Verdict::NonsolvableCertified { kind } => format!("not solvable ({kind:?} witness)"),
            Verdict::DerivedLengthAtLeast { n } => format!("derived length at least {n}"),
            Verdict::InconclusiveUpTo { max_word_length } => format!("inconclusive up to word length {max_word_length}"),
        };
        let _ = writeln!(out, "- verdict: {verdict}");
        let _ = writeln!(out, "- word length bound: {}", self.config.max_word_length);
        let _ = writeln!(
            out,
            "- elements enumerated: {}{}",
            self.enumerated_elements,
            if self.enumeration_truncated { " (truncated)" } else { "" }
        );
        let orbs: Vec<String> = self.orbitals.iter().map(|o| o.to_string()).collect();
        let _ = writeln!(out, "- group orbitals: {}", orbs.join(", "));
        let _ = writeln!(out, "- depth lower bound: {}", self.depth_lower_bound);
        if let Some(c) = &self.transition_chain {
            let _ = writeln!(
                out,
                "- transition chain: {} on {}, {} on {}",
                c.first.word.as_deref().unwrap_or("?"),
                c.first.orbital,
                c.second.word.as_deref().unwrap_or("?"),
                c.second.orbital
            );
        }
        for (label, w) in [("imbalance", &self.imbalance), ("inconsistent realization", &self.inconsistent)] {
            if let Some(w) = w {
                let _ = writeln!(out, "- {label}: {} on {} ({:?})", w.word, w.orbital, w.tag);
            }
        }
        let _ = writeln!(out, "\n| level | nontrivial | truncated | witness |\n|---|---|---|---|");
        for d in &self.derived_series {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                d.level,
                d.nontrivial,
                d.truncated,
                d.witness.as_deref().unwrap_or("")
            );
        }
        if let Some(c) = &self.certificate {
            let _ = writeln!(out, "\n| level | orbital | word |\n|---|---|---|");
            for (i, l) in c.levels.iter().enumerate() {
                let _ = writeln!(out, "| {} | {} | {} |", i + 1, l.orbital, l.word.as_deref().unwrap_or("(literal)"));
            }
        }
        out
    }
}

fn realization_record<S: Scalar>(g: &GroupSpec<S>, w: &RealizationWitness<S>) -> RealizationRecord<S> {
    RealizationRecord {
        word: g.render(&w.word),
        signature: w.map.clone(),
        orbital: w.orbital.clone(),
        tag: w.class.tag,
    }
}

fn orbital_record<S: Scalar>(g: &GroupSpec<S>, so: &SignedOrbital<S>) -> OrbitalRecord<S> {
    OrbitalRecord {
        orbital: so.orbital.clone(),
        word: so.witness.as_ref().map(|w| g.render(w)),
        signature: so.signature.clone(),
    }
}

/// Runs every search on the elements of length at most `L` and combines the
/// results into a verdict. Resource limits degrade the verdict, never fail.
pub fn analyze<S: Scalar>(g: &GroupSpec<S>, config: &AnalyzeConfig) -> AnalysisReport<S> {
    let l = config.max_word_length.min(config.caps.max_word_length);
    let orbitals = group_orbitals(g);
    let en = enumerate_bounded(g, l, config.caps.max_elements);
    let chain = transition_chain_in(&en.elements);
    let imbalance = imbalance_in(&orbitals, &en.elements);
    let inconsistent = inconsistent_in(&orbitals, &en.elements);
    let sampled = max_tower(&signed_orbitals_of(&en.elements)).height();
    let depth = depth_from_elements(g, &en.elements, config.tower_height, &config.caps).ok();
    let derived = derived_series_sample(g, sampled, l, &config.caps);
    let derived_series: Vec<DerivedRecord> = derived
        .iter()
        .map(|d| DerivedRecord {
            level: d.level,
            nontrivial: !d.is_empty(),
            truncated: d.truncated,
            witness: d.elements.first().map(|e| g.render(&e.word)),
        })
        .collect();
    let consistent = derived_series
        .iter()
        .filter(|d| d.level < sampled)
        .all(|d| d.nontrivial);
    let depth_lower_bound = depth.as_ref().map_or(0, |d| d.0);
    let kind = if imbalance.is_some() {
        Some(CertificateKind::Imbalance)
    } else if chain.is_some() {
        Some(CertificateKind::TransitionChain)
    } else if inconsistent.is_some() {
        Some(CertificateKind::Inconsistent)
    } else {
        None
    };
    let verdict = match kind {
        Some(kind) => Verdict::NonsolvableCertified { kind },
        None if depth_lower_bound > 0 => Verdict::DerivedLengthAtLeast { n: depth_lower_bound },
        None => Verdict::InconclusiveUpTo { max_word_length: l },
    };
    AnalysisReport {
        config: *config,
        orbitals,
        enumerated_elements: en.elements.len(),
        enumeration_truncated: en.truncated,
        transition_chain: chain.map(|c| ChainRecord {
            first: orbital_record(g, &c.first),
            second: orbital_record(g, &c.second),
        }),
        imbalance: imbalance.as_ref().map(|w| realization_record(g, w)),
        inconsistent: inconsistent.as_ref().map(|w| realization_record(g, w)),
        depth_lower_bound,
        certificate: depth.map(|d| d.1),
        derived_series,
        consistent,
        verdict,
    }
}
