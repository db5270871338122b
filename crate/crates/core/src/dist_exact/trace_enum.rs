//! Exact law of the trace digraph by path enumeration, split by step-count
//! composition.
//!
//! The digraph fixes how many times each support element was used, so paths
//! with different compositions never produce the same outcome. Each class is
//! enumerated separately (and in parallel); all its paths share the mass
//! `prod mu_s^{c_s}`, so an outcome's probability is its multiplicity times
//! that mass. Within a class the digraph is identified by the sorted multiset
//! of `(source id, step index)` pairs.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::groups::StepDistribution;
use crate::trace_codec;
use crate::walk::TraceDigraph;

use super::ball::CayleyBall;
use super::prob::{entropy_of, CompensatedSum, Probability};
use super::{ExactConfig, ExactError, LawTable};

type Key = SmallVec<[u64; 16]>;

const END_TAG: u64 = 1 << 63;

pub(crate) fn compositions(n: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(n: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in (0..=n).rev() {
            prefix.push(c);
            rec(n - c, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

#[derive(Default)]
struct Tally {
    gamma: FxHashMap<Key, u32>,
    with_end: FxHashMap<Key, u32>,
}

struct ClassWalker<'a> {
    ball: &'a CayleyBall,
    n: usize,
    want_gamma: bool,
    want_end: bool,
    remaining: Vec<u32>,
    path: Key,
    tally: Tally,
}

impl ClassWalker<'_> {
    fn dfs(&mut self, pos: u32, depth: usize) {
        if depth == self.n {
            let mut key = self.path.clone();
            key.sort_unstable();
            if self.want_end {
                let mut k2 = key.clone();
                k2.push(END_TAG | pos as u64);
                *self.tally.with_end.entry(k2).or_insert(0) += 1;
            }
            if self.want_gamma {
                *self.tally.gamma.entry(key).or_insert(0) += 1;
            }
            return;
        }
        for s in 0..self.remaining.len() {
            if self.remaining[s] == 0 {
                continue;
            }
            self.remaining[s] -= 1;
            self.path.push(((pos as u64) << 8) | s as u64);
            let next = self.ball.next(pos, s);
            self.dfs(next, depth + 1);
            self.path.pop();
            self.remaining[s] += 1;
        }
    }
}

fn class_mass<P: Probability>(masses: &[P], counts: &[u32]) -> P {
    let mut m = P::one();
    for (p, &c) in masses.iter().zip(counts) {
        for _ in 0..c {
            m = m.mul(p);
        }
    }
    m
}

#[cfg(feature = "parallel")]
fn map_classes<T, F>(classes: &[Vec<u32>], f: F) -> Result<Vec<T>, ExactError>
where
    T: Send,
    F: Fn(&[u32]) -> Result<T, ExactError> + Sync,
{
    use rayon::prelude::*;
    classes.par_iter().map(|c| f(c)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_classes<T, F>(classes: &[Vec<u32>], f: F) -> Result<Vec<T>, ExactError>
where
    F: Fn(&[u32]) -> Result<T, ExactError>,
{
    classes.iter().map(|c| f(c)).collect()
}

struct Setup<P> {
    ball: CayleyBall,
    masses: Vec<P>,
    classes: Vec<Vec<u32>>,
}

fn setup<P: Probability>(mu: &StepDistribution, n: usize, config: &ExactConfig) -> Result<Setup<P>, ExactError> {
    let k = mu.len();
    if k > 255 {
        return Err(ExactError::Invalid("trace enumeration supports at most 255 support atoms".into()));
    }
    let paths = (k as f64).powi(n as i32);
    if paths > config.max_paths as f64 {
        return Err(ExactError::Resource { what: "enumerated paths", limit: config.max_paths });
    }
    let masses = P::step_masses(mu)?;
    let ball = CayleyBall::build(mu, n, config.max_states)?;
    Ok(Setup { ball, masses, classes: compositions(n as u32, k) })
}

fn walk_class<'a>(ball: &'a CayleyBall, n: usize, counts: &[u32], want_gamma: bool, want_end: bool) -> Tally {
    let mut w = ClassWalker {
        ball,
        n,
        want_gamma,
        want_end,
        remaining: counts.to_vec(),
        path: Key::new(),
        tally: Tally::default(),
    };
    w.dfs(0, 0);
    w.tally
}

/// `H(Gamma_n)` and `H(Gamma_n, S_n)`.
pub(crate) struct TraceEntropies {
    pub h_gamma: f64,
    pub h_gamma_end: f64,
}

pub(crate) fn trace_entropies<P: Probability>(
    mu: &StepDistribution,
    n: usize,
    config: &ExactConfig,
) -> Result<TraceEntropies, ExactError> {
    let st = setup::<P>(mu, n, config)?;
    let cap = config.max_states;
    let parts = map_classes(&st.classes, |counts| {
        let tally = walk_class(&st.ball, n, counts, true, true);
        if tally.gamma.len() > cap || tally.with_end.len() > cap {
            return Err(ExactError::Resource { what: "trace outcomes", limit: cap });
        }
        let mass = class_mass(&st.masses, counts);
        let h = |m: &FxHashMap<Key, u32>| {
            m.values()
                .map(|&c| {
                    let p = P::from_count(c as u64).mul(&mass).to_f64();
                    -p * p.ln()
                })
                .collect::<CompensatedSum>()
        };
        Ok((h(&tally.gamma), h(&tally.with_end)))
    })?;
    let mut hg = CompensatedSum::default();
    let mut hge = CompensatedSum::default();
    for (a, b) in parts {
        hg.add(a.value());
        hge.add(b.value());
    }
    Ok(TraceEntropies {
        h_gamma: hg.value().max(0.0),
        h_gamma_end: hge.value().max(0.0),
    })
}

fn key_digraph(ball: &CayleyBall, mu: &StepDistribution, key: &[u64]) -> TraceDigraph {
    let mut g = TraceDigraph::new(mu.group());
    for &e in key.iter().filter(|&&e| e & END_TAG == 0) {
        let id = (e >> 8) as u32;
        let s = (e & 0xff) as usize;
        g.push_edge(ball.elements[id as usize].clone(), ball.elements[ball.next(id, s) as usize].clone());
    }
    g
}

/// Law of `Gamma_n` (or of `(Gamma_n, S_n)`) keyed by canonical trace keys.
pub(crate) fn trace_law<P: Probability>(
    mu: &StepDistribution,
    n: usize,
    with_endpoint: bool,
    config: &ExactConfig,
) -> Result<LawTable<P>, ExactError> {
    let st = setup::<P>(mu, n, config)?;
    let cap = config.max_states;
    let enumeration = mu.group().enumeration();
    let parts = map_classes(&st.classes, |counts| {
        let tally = walk_class(&st.ball, n, counts, !with_endpoint, with_endpoint);
        let map = if with_endpoint { tally.with_end } else { tally.gamma };
        if map.len() > cap {
            return Err(ExactError::Resource { what: "trace outcomes", limit: cap });
        }
        let mass = class_mass(&st.masses, counts);
        let mut out = Vec::with_capacity(map.len());
        for (key, c) in map {
            let g = key_digraph(&st.ball, mu, &key);
            let bytes = if with_endpoint {
                let end = (key[key.len() - 1] & !END_TAG) as usize;
                trace_codec::canonical_key_with_endpoint(&g, &st.ball.elements[end], &enumeration)?
            } else {
                trace_codec::canonical_key(&g, &enumeration)?
            };
            out.push((bytes, P::from_count(c as u64).mul(&mass)));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    })?;
    let mut entries: BTreeMap<Vec<u8>, P> = BTreeMap::new();
    for part in parts {
        for (k, p) in part {
            match entries.get_mut(&k) {
                Some(acc) => acc.add_assign(&p),
                None => {
                    entries.insert(k, p);
                }
            }
        }
        if entries.len() > cap {
            return Err(ExactError::Resource { what: "trace outcomes", limit: cap });
        }
    }
    Ok(LawTable::from_map(entries))
}

/// Comparison of the structural-key law of a trace with its codec-key law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub n: usize,
    pub with_endpoint: bool,
    pub structural_outcomes: usize,
    pub codec_outcomes: usize,
    /// Distinct structural outcomes received distinct codec keys.
    pub injective: bool,
    /// Every structural outcome carries exactly the mass of its codec key.
    pub same_masses: bool,
    pub h_structural: f64,
    pub h_codec: f64,
}

impl TransportReport {
    pub fn holds(&self) -> bool {
        self.injective && self.same_masses && self.structural_outcomes == self.codec_outcomes
    }
}

pub(crate) fn trace_key_transport<P: Probability>(
    mu: &StepDistribution,
    n: usize,
    with_endpoint: bool,
    config: &ExactConfig,
) -> Result<TransportReport, ExactError> {
    let st = setup::<P>(mu, n, config)?;
    let enumeration = mu.group().enumeration();
    let codec_law = trace_law::<P>(mu, n, with_endpoint, config)?;
    let parts = map_classes(&st.classes, |counts| {
        let tally = walk_class(&st.ball, n, counts, !with_endpoint, with_endpoint);
        let map = if with_endpoint { tally.with_end } else { tally.gamma };
        let mass = class_mass(&st.masses, counts);
        let mut out = Vec::with_capacity(map.len());
        for (key, c) in map {
            let g = key_digraph(&st.ball, mu, &key);
            let bytes = if with_endpoint {
                let end = (key[key.len() - 1] & !END_TAG) as usize;
                trace_codec::canonical_key_with_endpoint(&g, &st.ball.elements[end], &enumeration)?
            } else {
                trace_codec::canonical_key(&g, &enumeration)?
            };
            out.push((bytes, P::from_count(c as u64).mul(&mass)));
        }
        Ok(out)
    })?;
    let mut structural: Vec<(Vec<u8>, P)> = parts.into_iter().flatten().collect();
    let mut same = true;
    for (k, p) in &structural {
        same &= codec_law.get(k) == Some(p);
    }
    let h_structural = entropy_of(structural.iter().map(|(_, p)| p.to_f64()));
    let count = structural.len();
    structural.sort_by(|a, b| a.0.cmp(&b.0));
    structural.dedup_by(|a, b| a.0 == b.0);
    Ok(TransportReport {
        n,
        with_endpoint,
        structural_outcomes: count,
        codec_outcomes: codec_law.len(),
        injective: structural.len() == count,
        same_masses: same,
        h_structural,
        h_codec: codec_law.entropy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_count_is_binomial() {
        // C(n + k - 1, k - 1)
        assert_eq!(compositions(12, 4).len(), 455);
        assert_eq!(compositions(0, 3), vec![vec![0, 0, 0]]);
        assert_eq!(compositions(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
    }
}
