//! Seeded Monte Carlo estimates: entropies of ranges and traces, escape and
//! hitting probabilities, and the lower/upper-bound diagnostics built on them.
//!
//! Samples are split over a fixed number of streams (blocks). Stream `j` of
//! an estimate draws from `RngStreamSpec::new(seed, base + j)`, where `base`
//! separates the independent sub-estimates of one operation. Per-stream
//! results are merged in stream order, so output does not depend on how many
//! worker threads run the streams.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

use crate::dist_exact::{range_key, CompensatedSum};
use crate::groups::{GroupDescriptor, GroupElement, GroupError, StepDistribution};
use crate::stream::{RngStreamSpec, StreamRng};
use crate::trace_codec::{self, CodecError};
use crate::walk::{range_of, sample_trajectory_with, trace_of, StepSampler};

#[derive(Debug, thiserror::Error)]
pub enum McError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Exact(#[from] crate::dist_exact::ExactError),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Seed and block layout shared by all estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    /// Number of independent streams; also the jackknife block count.
    pub streams: u32,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { seed: 0, streams: 32 }
    }
}

const BASE_PRIMARY: u64 = 0;
const BASE_SECONDARY: u64 = 1 << 32;

pub(crate) fn stream_sizes(samples: u64, streams: u32) -> Vec<u64> {
    let b = streams.max(1) as u64;
    (0..b).map(|j| samples / b + u64::from(j < samples % b)).collect()
}

/// Runs `f(stream size, rng)` once per stream and returns results in stream order.
fn per_stream<T, F>(cfg: &McConfig, base: u64, samples: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut StreamRng) -> T + Sync,
{
    let jobs: Vec<(u64, u64)> = stream_sizes(samples, cfg.streams).into_iter().enumerate().map(|(j, m)| (j as u64, m)).collect();
    let run = |&(j, m): &(u64, u64)| f(m, &mut RngStreamSpec::new(cfg.seed, base + j).rng());
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter().map(run).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyMethod {
    PlugIn,
    PlugInMillerMadow,
}

impl EntropyMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            EntropyMethod::PlugIn => "plug-in",
            EntropyMethod::PlugInMillerMadow => "plug-in+miller-madow",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum McTarget {
    Range,
    RangeEndpoint,
    Trace,
    TraceEndpoint,
}

impl McTarget {
    pub const ALL: [McTarget; 4] = [McTarget::Range, McTarget::RangeEndpoint, McTarget::Trace, McTarget::TraceEndpoint];

    pub fn tag(&self) -> &'static str {
        match self {
            McTarget::Range => "range",
            McTarget::RangeEndpoint => "range+endpoint",
            McTarget::Trace => "trace",
            McTarget::TraceEndpoint => "trace+endpoint",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub target: McTarget,
    pub n: usize,
    /// Reported value according to `method`.
    pub value: f64,
    pub plug_in: f64,
    /// Delete-one-block jackknife standard error of the plug-in value.
    pub stderr: f64,
    pub samples: u64,
    pub distinct: u64,
    pub method: EntropyMethod,
}

impl EntropyEstimate {
    /// `(K - 1) / (2N)`.
    pub fn miller_madow_shift(&self) -> f64 {
        miller_madow_shift(self.distinct, self.samples)
    }
}

fn miller_madow_shift(distinct: u64, samples: u64) -> f64 {
    if samples == 0 {
        0.0
    } else {
        (distinct.saturating_sub(1)) as f64 / (2.0 * samples as f64)
    }
}

fn sum_c_ln_c<'a>(counts: impl IntoIterator<Item = &'a u64>) -> CompensatedSum {
    counts
        .into_iter()
        .filter(|&&c| c > 1)
        .map(|&c| c as f64 * (c as f64).ln())
        .collect()
}

/// Plug-in entropy `ln N - (1/N) sum c ln c` of outcome counts.
pub fn plug_in_entropy(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    (nf.ln() - sum_c_ln_c(counts).value() / nf).max(0.0)
}

/// Plug-in entropy plus the Miller-Madow term `(K - 1) / (2N)`.
pub fn miller_madow_entropy(counts: &[u64]) -> f64 {
    let k = counts.iter().filter(|&&c| c > 0).count() as u64;
    plug_in_entropy(counts) + miller_madow_shift(k, counts.iter().sum())
}

/// Plug-in estimate with a jackknife over blocks of counts.
fn blocked_entropy(blocks: &[FxHashMap<Vec<u8>, u64>]) -> (f64, f64, u64, u64) {
    let mut total: BTreeMap<&[u8], u64> = BTreeMap::new();
    for b in blocks {
        for (k, &c) in b {
            *total.entry(k.as_slice()).or_insert(0) += c;
        }
    }
    let n: u64 = total.values().sum();
    let s = sum_c_ln_c(total.values()).value();
    let h = |n: u64, s: f64| if n == 0 { 0.0 } else { ((n as f64).ln() - s / n as f64).max(0.0) };
    let full = h(n, s);
    let used: Vec<&FxHashMap<Vec<u8>, u64>> = blocks.iter().filter(|b| !b.is_empty()).collect();
    let g = used.len();
    let mut stderr = 0.0;
    if g >= 2 {
        let xlnx = |c: u64| if c > 1 { c as f64 * (c as f64).ln() } else { 0.0 };
        let loo: Vec<f64> = used
            .iter()
            .map(|b| {
                let nb: u64 = b.values().sum();
                let mut keys: Vec<(&Vec<u8>, &u64)> = b.iter().collect();
                keys.sort_unstable();
                let delta: CompensatedSum = keys
                    .into_iter()
                    .map(|(k, &c)| {
                        let t = total[k.as_slice()];
                        xlnx(t) - xlnx(t - c)
                    })
                    .collect();
                h(n - nb, s - delta.value())
            })
            .collect();
        let mean = loo.iter().sum::<f64>() / g as f64;
        let ss: f64 = loo.iter().map(|x| (x - mean) * (x - mean)).sum();
        stderr = ((g as f64 - 1.0) / g as f64 * ss).sqrt();
    }
    (full, stderr, n, total.len() as u64)
}

/// Estimates the entropy of the chosen outcome at step `n`.
pub fn mc_entropy(
    mu: &StepDistribution,
    n: usize,
    samples: u64,
    target: McTarget,
    method: EntropyMethod,
    cfg: &McConfig,
) -> Result<EntropyEstimate, McError> {
    if samples == 0 {
        return Err(McError::Invalid("samples must be >= 1".into()));
    }
    let group = mu.group();
    let enumeration = group.enumeration();
    let sampler = StepSampler::new(mu);
    let blocks = per_stream(cfg, BASE_PRIMARY, samples, |m, rng| -> Result<FxHashMap<Vec<u8>, u64>, McError> {
        let mut counts: FxHashMap<Vec<u8>, u64> = FxHashMap::default();
        for _ in 0..m {
            let t = sample_trajectory_with(mu, &sampler, n, rng);
            let key = match target {
                McTarget::Range | McTarget::RangeEndpoint => {
                    let r = range_of(group, &t);
                    let end = (target == McTarget::RangeEndpoint).then_some(&r.endpoint);
                    range_key(&enumeration, r.visited.elements().iter(), end)?
                }
                McTarget::Trace => trace_codec::canonical_key(&trace_of(group, &t), &enumeration)?,
                McTarget::TraceEndpoint => {
                    trace_codec::canonical_key_with_endpoint(&trace_of(group, &t), t.endpoint(), &enumeration)?
                }
            };
            *counts.entry(key).or_insert(0) += 1;
        }
        Ok(counts)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let (plug_in, stderr, n_total, distinct) = blocked_entropy(&blocks);
    let value = match method {
        EntropyMethod::PlugIn => plug_in,
        EntropyMethod::PlugInMillerMadow => plug_in + miller_madow_shift(distinct, n_total),
    };
    Ok(EntropyEstimate { target, n, value, plug_in, stderr, samples: n_total, distinct, method })
}

/// Estimate of a probability at a truncation horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingEstimate {
    pub horizon: u64,
    pub estimate: f64,
    /// `1.96 sqrt(p (1 - p) / samples)`.
    pub ci_half_width: f64,
    pub samples: u64,
    /// Truncated estimates of "never happens" events can only decrease as
    /// the horizon grows.
    pub non_increasing_in_horizon: bool,
}

impl HittingEstimate {
    fn from_count(horizon: u64, survivors: u64, samples: u64) -> Self {
        let p = if samples == 0 { 0.0 } else { survivors as f64 / samples as f64 };
        HittingEstimate {
            horizon,
            estimate: p,
            ci_half_width: 1.96 * (p * (1.0 - p) / samples.max(1) as f64).sqrt(),
            samples,
            non_increasing_in_horizon: true,
        }
    }
}

fn check_horizons(horizons: &[u64]) -> Result<Vec<u64>, McError> {
    if horizons.is_empty() || horizons.contains(&0) {
        return Err(McError::Invalid("horizons must be >= 1".into()));
    }
    let mut h = horizons.to_vec();
    h.sort_unstable();
    h.dedup();
    Ok(h)
}

/// Position arithmetic specialised per group for the long simulation loops.
trait Kernel: Sync {
    type Pos: Clone + PartialEq + Send + Sync;
    fn origin(&self) -> Self::Pos;
    fn apply(&self, pos: &mut Self::Pos, step: usize);
    fn lift(&self, x: &GroupElement) -> Self::Pos;
    /// Lower bound on the number of steps from `pos` to any of `targets`.
    fn steps_needed(&self, _pos: &Self::Pos, _targets: &[Self::Pos]) -> u64 {
        0
    }
}

struct IntKernel(Vec<i64>, u64);

impl Kernel for IntKernel {
    type Pos = i64;
    fn origin(&self) -> i64 {
        0
    }
    #[inline]
    fn apply(&self, pos: &mut i64, step: usize) {
        *pos += self.0[step];
    }
    fn lift(&self, x: &GroupElement) -> i64 {
        match x {
            GroupElement::Integer(v) => *v,
            _ => unreachable!("element checked against the group"),
        }
    }
    fn steps_needed(&self, pos: &i64, targets: &[i64]) -> u64 {
        let d = targets.iter().map(|t| t.abs_diff(*pos)).min().unwrap_or(u64::MAX);
        d.div_ceil(self.1)
    }
}

struct WordKernel(Vec<Vec<i8>>, u64);

/// Reduced word stored after a zero sentinel, so cancellation needs no branch.
#[derive(Clone, Debug)]
struct FreeWord {
    buf: Vec<i8>,
    len: usize,
}

impl FreeWord {
    fn letters(&self) -> &[i8] {
        &self.buf[1..=self.len]
    }

    #[inline]
    fn push(&mut self, s: i8) {
        if self.len + 1 >= self.buf.len() {
            self.buf.resize(2 * self.buf.len() + 2, 0);
        }
        let cancel = self.buf[self.len] == -s;
        self.buf[self.len + 1] = s;
        self.len = if cancel { self.len - 1 } else { self.len + 1 };
    }
}

impl PartialEq for FreeWord {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.letters() == other.letters()
    }
}

impl Kernel for WordKernel {
    type Pos = FreeWord;
    fn origin(&self) -> FreeWord {
        FreeWord { buf: vec![0; 64], len: 0 }
    }
    #[inline]
    fn apply(&self, pos: &mut FreeWord, step: usize) {
        for &s in &self.0[step] {
            pos.push(s);
        }
    }
    fn lift(&self, x: &GroupElement) -> FreeWord {
        let mut w = self.origin();
        if let GroupElement::Word(letters) = x {
            for &s in letters.iter() {
                w.push(s);
            }
        }
        w
    }
    fn steps_needed(&self, pos: &FreeWord, targets: &[FreeWord]) -> u64 {
        let d = targets.iter().map(|t| pos.len.abs_diff(t.len) as u64).min().unwrap_or(u64::MAX);
        d.div_ceil(self.1)
    }
}

const LATTICE_DIM: usize = 4;

struct LatticeKernel {
    steps: Vec<[i64; LATTICE_DIM]>,
    reach: u64,
    // functionals in {-1,0,1}^d that never decrease along a step
    monotone: Vec<[i64; LATTICE_DIM]>,
}

impl LatticeKernel {
    fn new(steps: Vec<[i64; LATTICE_DIM]>, dim: usize) -> Self {
        let reach = steps.iter().map(|v| v.iter().map(|c| c.unsigned_abs()).sum::<u64>()).max().unwrap_or(1).max(1);
        let dot = |a: &[i64; LATTICE_DIM], b: &[i64; LATTICE_DIM]| a.iter().zip(b).map(|(x, y)| x * y).sum::<i64>();
        let mut monotone = Vec::new();
        for code in 0..3usize.pow(dim as u32) {
            let mut phi = [0i64; LATTICE_DIM];
            let mut c = code;
            for slot in phi.iter_mut().take(dim) {
                *slot = (c % 3) as i64 - 1;
                c /= 3;
            }
            if steps.iter().all(|s| dot(&phi, s) >= 0) && steps.iter().any(|s| dot(&phi, s) > 0) {
                monotone.push(phi);
            }
        }
        LatticeKernel { steps, reach, monotone }
    }
}

fn lattice_coords(x: &GroupElement) -> [i64; LATTICE_DIM] {
    let mut out = [0i64; LATTICE_DIM];
    if let GroupElement::Vector(v) = x {
        for (o, c) in out.iter_mut().zip(v.iter()) {
            *o = *c;
        }
    }
    out
}

impl Kernel for LatticeKernel {
    type Pos = [i64; LATTICE_DIM];
    fn origin(&self) -> Self::Pos {
        [0; LATTICE_DIM]
    }
    #[inline]
    fn apply(&self, pos: &mut Self::Pos, step: usize) {
        for (p, d) in pos.iter_mut().zip(&self.steps[step]) {
            *p += d;
        }
    }
    fn lift(&self, x: &GroupElement) -> Self::Pos {
        lattice_coords(x)
    }
    fn steps_needed(&self, pos: &Self::Pos, targets: &[Self::Pos]) -> u64 {
        let dot = |a: &[i64; LATTICE_DIM], b: &[i64; LATTICE_DIM]| a.iter().zip(b).map(|(x, y)| x * y).sum::<i64>();
        // a non-decreasing functional already above every target
        if self.monotone.iter().any(|phi| targets.iter().all(|t| dot(phi, pos) > dot(phi, t))) {
            return u64::MAX;
        }
        let d = targets
            .iter()
            .map(|t| t.iter().zip(pos).map(|(a, b)| a.abs_diff(*b)).sum::<u64>())
            .min()
            .unwrap_or(u64::MAX);
        d.div_ceil(self.reach)
    }
}

struct GenericKernel<'a> {
    group: &'a GroupDescriptor,
    steps: Vec<GroupElement>,
}

impl Kernel for GenericKernel<'_> {
    type Pos = GroupElement;
    fn origin(&self) -> GroupElement {
        self.group.identity()
    }
    #[inline]
    fn apply(&self, pos: &mut GroupElement, step: usize) {
        self.group.mul_assign(pos, &self.steps[step]);
    }
    fn lift(&self, x: &GroupElement) -> GroupElement {
        x.clone()
    }
}

fn survival_with<K: Kernel>(
    kernel: &K,
    sampler: &StepSampler,
    targets: &[GroupElement],
    horizons: &[u64],
    samples: u64,
    cfg: &McConfig,
    base: u64,
) -> Vec<u64> {
    let targets: Vec<K::Pos> = targets.iter().map(|x| kernel.lift(x)).collect();
    let max = *horizons.last().expect("non-empty horizons");
    let parts = per_stream(cfg, base, samples, |m, rng| {
        let mut surv = vec![0u64; horizons.len()];
        let mut cur = kernel.origin();
        let origin = kernel.origin();
        for _ in 0..m {
            cur.clone_from(&origin);
            let mut hit_at = max + 1;
            let mut draws = sampler.draws(&mut *rng);
            for k in 1..=max {
                kernel.apply(&mut cur, draws.next_index());
                if targets.iter().any(|t| *t == cur) {
                    hit_at = k;
                    break;
                }
                // the remaining steps cannot reach a target
                if (k < 256 || k % 256 == 0) && kernel.steps_needed(&cur, &targets) > max - k {
                    break;
                }
            }
            for (i, &h) in horizons.iter().enumerate() {
                if hit_at > h {
                    surv[i] += 1;
                }
            }
        }
        surv
    });
    let mut total = vec![0u64; horizons.len()];
    for p in parts {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    total
}

/// Number of paths, per horizon `N`, that avoid every element of `targets`
/// at times `1..=N`. All horizons are read off the same paths.
fn survival_counts(
    mu: &StepDistribution,
    horizons: &[u64],
    samples: u64,
    cfg: &McConfig,
    base: u64,
    targets: &[GroupElement],
) -> Vec<u64> {
    let sampler = StepSampler::new(mu);
    let group = mu.group();
    match group {
        GroupDescriptor::IntegerLine => {
            let d: Vec<i64> = mu.elements().map(|x| if let GroupElement::Integer(v) = x { *v } else { 0 }).collect();
            let reach = d.iter().map(|v| v.unsigned_abs()).max().unwrap_or(1).max(1);
            let k = IntKernel(d, reach);
            survival_with(&k, &sampler, targets, horizons, samples, cfg, base)
        }
        GroupDescriptor::FreeGroup { .. } => {
            let w: Vec<Vec<i8>> =
                mu.elements().map(|x| if let GroupElement::Word(w) = x { w.to_vec() } else { Vec::new() }).collect();
            let reach = w.iter().map(|v| v.len() as u64).max().unwrap_or(1).max(1);
            let k = WordKernel(w, reach);
            survival_with(&k, &sampler, targets, horizons, samples, cfg, base)
        }
        GroupDescriptor::IntegerLattice { dim } if *dim <= LATTICE_DIM => {
            let k = LatticeKernel::new(mu.elements().map(lattice_coords).collect(), *dim);
            survival_with(&k, &sampler, targets, horizons, samples, cfg, base)
        }
        _ => {
            let k = GenericKernel { group, steps: mu.elements().cloned().collect() };
            survival_with(&k, &sampler, targets, horizons, samples, cfg, base)
        }
    }
}

/// `P(S_k != e for 1 <= k <= N)` for each horizon `N`, from the same paths.
pub fn escape_rate(
    mu: &StepDistribution,
    horizons: &[u64],
    samples: u64,
    cfg: &McConfig,
) -> Result<Vec<HittingEstimate>, McError> {
    let h = check_horizons(horizons)?;
    let group = mu.group();
    let surv = survival_counts(mu, &h, samples, cfg, BASE_PRIMARY, &[group.identity()]);
    Ok(h.iter().zip(surv).map(|(&n, s)| HittingEstimate::from_count(n, s, samples)).collect())
}

/// `P(tau_x > N)` with `tau_x = inf{k >= 1 : S_k = x}` for each horizon `N`.
pub fn hitting_tail(
    mu: &StepDistribution,
    x: &GroupElement,
    horizons: &[u64],
    samples: u64,
    cfg: &McConfig,
) -> Result<Vec<HittingEstimate>, McError> {
    let h = check_horizons(horizons)?;
    if !mu.group().contains(x) {
        return Err(McError::Invalid(format!("{x} is not an element of the walk's group")));
    }
    let surv = survival_counts(mu, &h, samples, cfg, BASE_PRIMARY, std::slice::from_ref(x));
    Ok(h.iter().zip(surv).map(|(&n, s)| HittingEstimate::from_count(n, s, samples)).collect())
}

/// Counts `|R_n|` without storing positions when the range is an interval.
enum RangeTracker {
    Interval { lo: i64, hi: i64, pos: i64 },
    Set(FxHashSet<GroupElement>, GroupElement),
}

impl RangeTracker {
    fn new(mu: &StepDistribution) -> Self {
        let nearest = *mu.group() == GroupDescriptor::IntegerLine
            && mu.elements().all(|x| matches!(x, GroupElement::Integer(v) if v.abs() <= 1));
        if nearest {
            RangeTracker::Interval { lo: 0, hi: 0, pos: 0 }
        } else {
            let e = mu.group().identity();
            RangeTracker::Set(FxHashSet::from_iter([e.clone()]), e)
        }
    }

    fn reset(&mut self, group: &GroupDescriptor) {
        match self {
            RangeTracker::Interval { lo, hi, pos } => (*lo, *hi, *pos) = (0, 0, 0),
            RangeTracker::Set(set, cur) => {
                set.clear();
                *cur = group.identity();
                set.insert(cur.clone());
            }
        }
    }

    fn step(&mut self, group: &GroupDescriptor, x: &GroupElement) {
        match self {
            RangeTracker::Interval { lo, hi, pos } => {
                if let GroupElement::Integer(v) = x {
                    *pos += v;
                    *lo = (*lo).min(*pos);
                    *hi = (*hi).max(*pos);
                }
            }
            RangeTracker::Set(set, cur) => {
                group.mul_assign(cur, x);
                if !set.contains(cur) {
                    set.insert(cur.clone());
                }
            }
        }
    }

    fn size(&self) -> u64 {
        match self {
            RangeTracker::Interval { lo, hi, .. } => (hi - lo + 1) as u64,
            RangeTracker::Set(set, _) => set.len() as u64,
        }
    }
}

/// Sample mean with a normal 95% half-width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub n: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub ci_half_width: f64,
    pub samples: u64,
}

fn mean_estimate(n: usize, sum: f64, sum_sq: f64, samples: u64) -> MeanEstimate {
    let k = samples.max(1) as f64;
    let mean = sum / k;
    let var = if samples > 1 { ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0) } else { 0.0 };
    let stderr = (var / k).sqrt();
    MeanEstimate { n, estimate: mean, stderr, ci_half_width: 1.96 * stderr, samples }
}

/// Estimate of `E |R_n| / n`.
pub fn mean_range_rate(mu: &StepDistribution, n: usize, samples: u64, cfg: &McConfig) -> Result<MeanEstimate, McError> {
    if n == 0 || samples == 0 {
        return Err(McError::Invalid("n and samples must be >= 1".into()));
    }
    let group = mu.group();
    let sampler = StepSampler::new(mu);
    let steps: Vec<GroupElement> = mu.elements().cloned().collect();
    let parts = per_stream(cfg, BASE_PRIMARY, samples, |m, rng| {
        let mut tracker = RangeTracker::new(mu);
        let (mut s, mut s2) = (0u128, 0u128);
        for _ in 0..m {
            tracker.reset(group);
            for _ in 0..n {
                tracker.step(group, &steps[sampler.sample(rng)]);
            }
            let r = tracker.size() as u128;
            s += r;
            s2 += r * r;
        }
        (s, s2)
    });
    let (s, s2) = parts.into_iter().fold((0u128, 0u128), |a, b| (a.0 + b.0, a.1 + b.1));
    // integer sums keep the mean exact when every path has the same range size
    let k = samples as f64;
    let nf = n as f64;
    let mean = s as f64 / (k * nf);
    let var = if samples > 1 {
        ((s2 as f64 - (s as f64) * (s as f64) / k) / (k - 1.0)).max(0.0) / (nf * nf)
    } else {
        0.0
    };
    let stderr = (var / k).sqrt();
    Ok(MeanEstimate { n, estimate: mean, stderr, ci_half_width: 1.96 * stderr, samples })
}

fn validate_support_element(mu: &StepDistribution, a: &GroupElement) -> Result<f64, McError> {
    let p = mu.prob(a);
    if mu.group().is_identity(a) || !(p > 0.0 && p < 1.0) {
        return Err(McError::Invalid(format!("{a} must be a non-identity support element with mass in (0, 1)")));
    }
    Ok(p)
}

/// `c = -mu(a) ln mu(a) * P(tau_{a^-1} = inf) * gamma_escape`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundEstimate {
    pub value: f64,
    pub entropy_factor: f64,
    pub never_hit: f64,
    pub escape: f64,
    pub ci_half_width: f64,
    /// `None` when the probabilities are exact.
    pub horizon: Option<u64>,
    /// Truncated tail probabilities overestimate their limits.
    pub truncation_biases_upward: bool,
}

/// Monte Carlo version; the two probabilities use disjoint streams.
pub fn h_gamma_lower_bound(
    mu: &StepDistribution,
    a: &GroupElement,
    horizon: u64,
    samples: u64,
    cfg: &McConfig,
) -> Result<LowerBoundEstimate, McError> {
    let pa = validate_support_element(mu, a)?;
    let k = -pa * pa.ln();
    let group = mu.group();
    let target = group.inverse(a);
    let h = check_horizons(&[horizon])?;
    let tail = survival_counts(mu, &h, samples, cfg, BASE_SECONDARY, &[target])[0];
    let esc = survival_counts(mu, &h, samples, cfg, BASE_PRIMARY, &[group.identity()])[0];
    let (p, g) = (tail as f64 / samples as f64, esc as f64 / samples as f64);
    let var = g * g * p * (1.0 - p) / samples as f64 + p * p * g * (1.0 - g) / samples as f64;
    Ok(LowerBoundEstimate {
        value: k * p * g,
        entropy_factor: k,
        never_hit: p,
        escape: g,
        ci_half_width: 1.96 * k * var.sqrt(),
        horizon: Some(horizon),
        truncation_biases_upward: true,
    })
}

/// Version with exactly known probabilities.
pub fn h_gamma_lower_bound_exact(
    mu: &StepDistribution,
    a: &GroupElement,
    never_hit: f64,
    escape: f64,
) -> Result<LowerBoundEstimate, McError> {
    let pa = validate_support_element(mu, a)?;
    let k = -pa * pa.ln();
    Ok(LowerBoundEstimate {
        value: k * never_hit * escape,
        entropy_factor: k,
        never_hit,
        escape,
        ci_half_width: 0.0,
        horizon: None,
        truncation_biases_upward: false,
    })
}

/// Integer value of `x` on groups identified with the integer line.
fn line_value(group: &GroupDescriptor, x: &GroupElement) -> Option<i64> {
    match (group, x) {
        (GroupDescriptor::IntegerLine, GroupElement::Integer(v)) => Some(*v),
        (GroupDescriptor::IntegerLattice { dim: 1 }, GroupElement::Vector(v)) => Some(v[0]),
        (GroupDescriptor::FreeGroup { rank: 1 }, GroupElement::Word(w)) => Some(w.iter().map(|&s| i64::from(s.signum())).sum()),
        _ => None,
    }
}

fn line_atoms(mu: &StepDistribution) -> Option<Vec<(i64, f64)>> {
    mu.support().iter().map(|(x, p)| line_value(mu.group(), x).map(|v| (v, *p))).collect()
}

/// Uniform measure on the generators of `F_r` and their inverses.
fn uniform_free_rank(mu: &StepDistribution) -> Option<usize> {
    let GroupDescriptor::FreeGroup { rank } = *mu.group() else { return None };
    let generators = mu.support().iter().all(|(x, p)| {
        matches!(x, GroupElement::Word(w) if w.len() == 1) && (p * (2 * rank) as f64 - 1.0).abs() < 1e-12
    });
    (generators && mu.len() == 2 * rank).then_some(rank)
}

/// Smallest root in `[0, 1]` of `sum mu(k) r^(1-k) = r` for a walk with
/// steps at most `+1`: the probability of ever reaching `+1`.
fn upward_reach(atoms: &[(i64, f64)]) -> f64 {
    let psi = |r: f64| atoms.iter().map(|&(k, p)| p * r.powi((1 - k) as i32)).sum::<f64>() - r;
    let dpsi = |r: f64| atoms.iter().filter(|&&(k, _)| k < 1).map(|&(k, p)| p * (1 - k) as f64 * r.powi(-k as i32)).sum::<f64>() - 1.0;
    // Newton from 0 increases monotonically to the smallest root of a convex function
    let mut r = 0.0;
    for _ in 0..200 {
        let d = dpsi(r);
        if d >= 0.0 {
            break;
        }
        let next = r - psi(r) / d;
        if !(next > r) {
            break;
        }
        r = next.min(1.0);
    }
    r
}

/// Closed-form escape rate `P(S_n != e for all n >= 1)`, when one is known:
/// zero for recurrent walks, `|m|` for skip-free walks on the integer line
/// drifting towards the skip-free side, one when a grading is positive on
/// the support, and `1 - 1/(2r - 1)` for the simple walk on `F_r`.
pub fn exact_escape_rate(mu: &StepDistribution) -> Option<f64> {
    if mu.group().order().is_some() {
        return Some(0.0);
    }
    if let Some(atoms) = line_atoms(mu) {
        let m: f64 = atoms.iter().map(|&(k, p)| k as f64 * p).sum();
        if m.abs() < 1e-12 {
            return Some(0.0);
        }
        let min = atoms.iter().map(|&(k, _)| k).min()?;
        let max = atoms.iter().map(|&(k, _)| k).max()?;
        return ((m < 0.0 && min >= -1) || (m > 0.0 && max <= 1)).then_some(m.abs());
    }
    if crate::classify::find_grading(mu).is_some() {
        return Some(1.0);
    }
    if let Some(r) = uniform_free_rank(mu) {
        return Some(1.0 - 1.0 / (2 * r - 1) as f64);
    }
    if *mu.group() == (GroupDescriptor::IntegerLattice { dim: 2 }) {
        let mut m = [0.0; 2];
        for (x, p) in mu.support() {
            if let GroupElement::Vector(v) = x {
                m[0] += v[0] as f64 * p;
                m[1] += v[1] as f64 * p;
            }
        }
        if m[0].abs() < 1e-12 && m[1].abs() < 1e-12 {
            return Some(0.0);
        }
    }
    None
}

/// Closed-form `P(tau_x = inf)` for `x != e`, when one is known.
pub fn exact_never_hit(mu: &StepDistribution, x: &GroupElement) -> Option<f64> {
    let group = mu.group();
    if group.is_identity(x) {
        return None;
    }
    if group.order().is_some() {
        return Some(0.0);
    }
    if let Some(atoms) = line_atoms(mu) {
        let t = line_value(group, x)?;
        let m: f64 = atoms.iter().map(|&(k, p)| k as f64 * p).sum();
        if m.abs() < 1e-12 {
            // recurrent and irreducible: every point is hit
            return Some(0.0);
        }
        // reflect so that the drift is negative
        let (atoms, t): (Vec<(i64, f64)>, i64) =
            if m > 0.0 { (atoms.iter().map(|&(k, p)| (-k, p)).collect(), -t) } else { (atoms, t) };
        let min = atoms.iter().map(|&(k, _)| k).min()?;
        let max = atoms.iter().map(|&(k, _)| k).max()?;
        return if t < 0 {
            (min >= -1).then_some(0.0)
        } else if max <= 1 {
            Some(1.0 - upward_reach(&atoms).powi(t as i32))
        } else {
            None
        };
    }
    if let Some(g) = crate::classify::find_grading(mu) {
        if g.value(x) < 0 {
            return Some(1.0);
        }
    }
    if let (Some(r), GroupElement::Word(w)) = (uniform_free_rank(mu), x) {
        return Some(1.0 - (1.0 / (2 * r - 1) as f64).powi(w.len() as i32));
    }
    None
}

/// Exact lower bound maximised over the support, when both probabilities
/// are known in closed form for some support element.
pub fn exact_h_gamma_lower_bound(mu: &StepDistribution) -> Option<(GroupElement, LowerBoundEstimate)> {
    let escape = exact_escape_rate(mu)?;
    let mut best: Option<(GroupElement, LowerBoundEstimate)> = None;
    for (a, _) in mu.support() {
        let Some(never) = exact_never_hit(mu, &mu.group().inverse(a)) else { continue };
        let Ok(b) = h_gamma_lower_bound_exact(mu, a, never, escape) else { continue };
        if best.as_ref().is_none_or(|(_, c)| b.value > c.value) {
            best = Some((a.clone(), b));
        }
    }
    best
}

/// `-P(tau_g = inf) P(reversed walk avoids e and g) ln(1 - mu(g))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeBoundDiagnostic {
    pub value: f64,
    pub never_hit: f64,
    pub reversed_avoids_both: f64,
    pub ci_half_width: f64,
    pub horizon: u64,
    /// Always true: a soft diagnostic, biased upward by truncation.
    pub soft: bool,
}

pub fn h_r_lower_bound_diag(
    mu: &StepDistribution,
    g: &GroupElement,
    horizon: u64,
    samples: u64,
    cfg: &McConfig,
) -> Result<RangeBoundDiagnostic, McError> {
    let pg = validate_support_element(mu, g)?;
    let group = mu.group();
    let h = check_horizons(&[horizon])?;
    let a = survival_counts(mu, &h, samples, cfg, BASE_PRIMARY, std::slice::from_ref(g))[0];
    let rev = mu.reversed();
    let b = survival_counts(&rev, &h, samples, cfg, BASE_SECONDARY, &[g.clone(), group.identity()])[0];
    let (p, q) = (a as f64 / samples as f64, b as f64 / samples as f64);
    let l = -(1.0 - pg).ln();
    let var = q * q * p * (1.0 - p) / samples as f64 + p * p * q * (1.0 - q) / samples as f64;
    Ok(RangeBoundDiagnostic {
        value: l * p * q,
        never_hit: p,
        reversed_avoids_both: q,
        ci_half_width: 1.96 * l * var.sqrt(),
        horizon,
        soft: true,
    })
}

/// `Y = O ln(1 + r/O) + r ln(1 + O/r)` with `r = |R_n| - 1`, and `Y = 0`
/// when `O = 0`.
pub fn y_term(o: u64, range_size: u64) -> f64 {
    let r = range_size.saturating_sub(1) as f64;
    let o = o as f64;
    if o == 0.0 || r == 0.0 {
        return 0.0;
    }
    o * (r / o).ln_1p() + r * (o / r).ln_1p()
}

/// Monte Carlo mean of `(1/n) sum_i Y_n^i`.
pub fn trace_upper_diagnostic(mu: &StepDistribution, n: usize, samples: u64, cfg: &McConfig) -> Result<MeanEstimate, McError> {
    if n == 0 || samples == 0 {
        return Err(McError::Invalid("n and samples must be >= 1".into()));
    }
    let group = mu.group();
    let sampler = StepSampler::new(mu);
    let steps: Vec<GroupElement> = mu.elements().cloned().collect();
    let parts = per_stream(cfg, BASE_PRIMARY, samples, |m, rng| {
        let mut tracker = RangeTracker::new(mu);
        let mut counts = vec![0u64; steps.len()];
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            tracker.reset(group);
            counts.iter_mut().for_each(|c| *c = 0);
            for _ in 0..n {
                let i = sampler.sample(rng);
                counts[i] += 1;
                tracker.step(group, &steps[i]);
            }
            let size = tracker.size();
            let v = counts.iter().map(|&o| y_term(o, size)).sum::<f64>() / n as f64;
            s += v;
            s2 += v * v;
        }
        (s, s2)
    });
    let (s, s2) = parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(mean_estimate(n, s, s2, samples))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodnessOfFit {
    pub n: usize,
    pub samples: u64,
    /// Observed frequency of `O_n^i = k` for `k = 0..=n`.
    pub histogram: Vec<u64>,
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub passes: bool,
}

/// Pools adjacent bins from both tails until each pooled bin expects at
/// least five observations.
fn pool_bins(observed: &[u64], expected: &[f64]) -> Vec<(f64, f64)> {
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        acc.0 += o as f64;
        acc.1 += e;
        if acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    pooled
}

/// Chi-square test of the empirical law of `O_n^i` (uses of support element
/// `i` in `n` steps) against `Binomial(n, mu(g_i))`.
pub fn binomial_marginal_check(
    mu: &StepDistribution,
    n: usize,
    samples: u64,
    i: usize,
    cfg: &McConfig,
) -> Result<GoodnessOfFit, McError> {
    if i >= mu.len() || samples == 0 {
        return Err(McError::Invalid(format!("support index {i} out of range or no samples")));
    }
    let sampler = StepSampler::new(mu);
    let parts = per_stream(cfg, BASE_PRIMARY, samples, |m, rng| {
        let mut hist = vec![0u64; n + 1];
        for _ in 0..m {
            let o = (0..n).filter(|_| sampler.sample(rng) == i).count();
            hist[o] += 1;
        }
        hist
    });
    let mut histogram = vec![0u64; n + 1];
    for p in parts {
        for (h, x) in histogram.iter_mut().zip(p) {
            *h += x;
        }
    }
    let p = mu.probabilities()[i];
    let binom = Binomial::new(p, n as u64).map_err(|e| McError::Invalid(e.to_string()))?;
    let expected: Vec<f64> = (0..=n as u64).map(|k| binom.pmf(k) * samples as f64).collect();
    let pooled = pool_bins(&histogram, &expected);
    let statistic: f64 = pooled.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = pooled.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        let chi = ChiSquared::new(df as f64).map_err(|e| McError::Invalid(e.to_string()))?;
        1.0 - chi.cdf(statistic)
    };
    Ok(GoodnessOfFit { n, samples, histogram, statistic, degrees_of_freedom: df, p_value, passes: p_value > 1e-3 })
}

/// One row of the Monte Carlo CSV output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRecord {
    pub target: String,
    pub n: u64,
    pub samples: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub method: String,
    pub seed: u64,
}

pub fn write_mc_csv<W: Write>(records: &[McRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "target,n,samples,estimate,stderr,method,seed")?;
    for r in records {
        writeln!(w, "{},{},{},{:.12},{:.12},{},{}", r.target, r.n, r.samples, r.estimate, r.stderr, r.method, r.seed)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::letters_to_word;

    fn z(atoms: &[(i64, f64)]) -> StepDistribution {
        StepDistribution::new(GroupDescriptor::IntegerLine, atoms.iter().map(|&(x, p)| (GroupElement::Integer(x), p)).collect())
            .unwrap()
    }

    fn directed() -> StepDistribution {
        let v = |a: i64, b: i64| GroupElement::Vector([a, b].into_iter().collect());
        StepDistribution::new(GroupDescriptor::IntegerLattice { dim: 2 }, vec![(v(1, 0), 0.5), (v(0, 1), 0.5)]).unwrap()
    }

    #[test]
    fn plug_in_examples() {
        assert!((plug_in_entropy(&[2, 2]) - std::f64::consts::LN_2).abs() < 1e-15);
        let h = -0.75 * 0.75f64.ln() - 0.25 * 0.25f64.ln();
        assert!((plug_in_entropy(&[3, 1]) - h).abs() < 1e-15);
        assert!((plug_in_entropy(&[3, 1]) - 0.562335).abs() < 1e-6);
        assert!((miller_madow_entropy(&[3, 1]) - (h + 1.0 / 8.0)).abs() < 1e-15);
        assert_eq!(plug_in_entropy(&[7]), 0.0);
    }

    #[test]
    fn jackknife_matches_direct_leave_one_out() {
        let mk = |v: &[(u8, u64)]| v.iter().map(|&(k, c)| (vec![k], c)).collect::<FxHashMap<_, _>>();
        let blocks = vec![mk(&[(0, 3), (1, 1)]), mk(&[(0, 1), (2, 2)]), mk(&[(1, 2), (2, 1), (3, 1)])];
        let (h, se, n, k) = blocked_entropy(&blocks);
        assert_eq!((n, k), (11, 4));
        assert!((h - plug_in_entropy(&[4, 3, 3, 1])).abs() < 1e-14);
        let loo = [plug_in_entropy(&[1, 2, 3, 1]), plug_in_entropy(&[3, 3, 1, 1]), plug_in_entropy(&[4, 1, 2])];
        let mean = loo.iter().sum::<f64>() / 3.0;
        let direct = (2.0 / 3.0 * loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>()).sqrt();
        assert!((se - direct).abs() < 1e-14);
    }

    #[test]
    fn estimates_are_reproducible() {
        let mu = z(&[(-1, 0.7), (1, 0.3)]);
        let cfg = McConfig { seed: 11, streams: 8 };
        let a = mc_entropy(&mu, 6, 2000, McTarget::TraceEndpoint, EntropyMethod::PlugIn, &cfg).unwrap();
        let b = mc_entropy(&mu, 6, 2000, McTarget::TraceEndpoint, EntropyMethod::PlugIn, &cfg).unwrap();
        assert_eq!(a, b);
        let c = mc_entropy(&mu, 6, 2000, McTarget::TraceEndpoint, EntropyMethod::PlugIn, &McConfig { seed: 12, streams: 8 })
            .unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn directed_lattice_escapes_surely() {
        let mu = directed();
        let cfg = McConfig::default();
        for e in escape_rate(&mu, &[1, 10, 100], 500, &cfg).unwrap() {
            assert_eq!(e.estimate, 1.0);
        }
        let x = GroupElement::Vector([-1, 0].into_iter().collect());
        for e in hitting_tail(&mu, &x, &[1, 50], 500, &cfg).unwrap() {
            assert_eq!(e.estimate, 1.0);
        }
        let r = mean_range_rate(&mu, 25, 100, &cfg).unwrap();
        assert_eq!(r.estimate, 26.0 / 25.0);
        let v = GroupElement::Vector([1, 0].into_iter().collect());
        let c = h_gamma_lower_bound(&mu, &v, 200, 400, &cfg).unwrap();
        assert!((c.value - 0.5 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn directed_lattice_range_rate() {
        let mu = directed();
        let cfg = McConfig { seed: 5, streams: 16 };
        let e = mc_entropy(&mu, 12, 100_000, McTarget::Range, EntropyMethod::PlugIn, &cfg).unwrap();
        assert!((e.value / 12.0 - std::f64::consts::LN_2).abs() < 0.05, "{}", e.value / 12.0);
        // 2^20 equally likely ranges: 10^5 samples are almost all distinct and the
        // plug-in value saturates near ln N
        let e = mc_entropy(&mu, 20, 100_000, McTarget::Range, EntropyMethod::PlugInMillerMadow, &cfg).unwrap();
        assert!(e.plug_in <= (100_000f64).ln() + 1e-9);
        assert!(std::f64::consts::LN_2 - e.value / 20.0 > 0.05);
    }

    #[test]
    fn truncated_estimates_decrease() {
        let mu = z(&[(-1, 0.5), (1, 0.5)]);
        let est = escape_rate(&mu, &[1000, 10, 100, 1], 3000, &McConfig::default()).unwrap();
        assert_eq!(est.iter().map(|e| e.horizon).collect::<Vec<_>>(), vec![1, 10, 100, 1000]);
        assert!(est.windows(2).all(|w| w[0].estimate >= w[1].estimate));
        assert_eq!(est[0].estimate, 1.0);
        assert!(escape_rate(&mu, &[0], 10, &McConfig::default()).is_err());
    }

    #[test]
    fn free_group_tail_runs() {
        let w = |s: &str| GroupElement::Word(letters_to_word(s).unwrap());
        let mu = StepDistribution::new(
            GroupDescriptor::FreeGroup { rank: 2 },
            vec![(w("a"), 0.25), (w("A"), 0.25), (w("b"), 0.25), (w("B"), 0.25)],
        )
        .unwrap();
        let t = hitting_tail(&mu, &w("a"), &[200], 4000, &McConfig::default()).unwrap();
        // P(never hit a) = 2/3 for the simple walk on the 4-regular tree
        assert!((t[0].estimate - 2.0 / 3.0).abs() < 4.0 * t[0].ci_half_width.max(0.01));
    }

    #[test]
    fn y_term_edge_cases() {
        assert_eq!(y_term(0, 5), 0.0);
        assert_eq!(y_term(3, 1), 0.0);
        // n = 1: one step used once, |R_1| - 1 = 1
        assert!((y_term(1, 2) - 2.0 * 2f64.ln()).abs() < 1e-15);
        let mu = z(&[(-1, 0.5), (1, 0.5)]);
        let d = trace_upper_diagnostic(&mu, 1, 100, &McConfig::default()).unwrap();
        assert!((d.estimate - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn binomial_small_cases() {
        let mu = z(&[(-1, 0.7), (1, 0.3)]);
        let cfg = McConfig::default();
        let r = binomial_marginal_check(&mu, 0, 1000, 1, &cfg).unwrap();
        assert_eq!(r.histogram, vec![1000]);
        assert_eq!(r.p_value, 1.0);
        let up = mu.position(&GroupElement::Integer(1)).unwrap();
        let r = binomial_marginal_check(&mu, 1, 20000, up, &cfg).unwrap();
        assert_eq!(r.histogram.iter().sum::<u64>(), 20000);
        assert!((r.histogram[1] as f64 / 20000.0 - 0.3).abs() < 0.02);
        assert!(binomial_marginal_check(&mu, 1, 10, 2, &cfg).is_err());
    }

    #[test]
    fn csv_layout() {
        let rec = McRecord {
            target: "range".into(),
            n: 8,
            samples: 10,
            estimate: 1.5,
            stderr: 0.25,
            method: "plug-in".into(),
            seed: 3,
        };
        let mut buf = Vec::new();
        write_mc_csv(&[rec], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "target,n,samples,estimate,stderr,method,seed\nrange,8,10,1.500000000000,0.250000000000,plug-in,3\n"
        );
    }

    /// Mass of paths hitting `target` within `steps` steps (for `target = 0`,
    /// returning at some `n >= 1`), positions kept in `[-width, width]`.
    fn truncated_hit(atoms: &[(i64, f64)], target: i64, steps: usize, width: i64) -> f64 {
        let size = (2 * width + 1) as usize;
        let mut dist = vec![0.0; size];
        dist[width as usize] = 1.0;
        let mut hit = 0.0;
        for _ in 0..steps {
            let mut next = vec![0.0; size];
            for (i, &m) in dist.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                for &(k, p) in atoms {
                    let y = i as i64 - width + k;
                    if y == target {
                        hit += m * p;
                    } else if y.abs() <= width {
                        next[(y + width) as usize] += m * p;
                    }
                }
            }
            dist = next;
        }
        hit
    }

    #[test]
    fn closed_forms_match_truncated_dp() {
        let nn = [(-1, 0.7), (1, 0.3)];
        assert!((exact_escape_rate(&z(&nn)).unwrap() - 0.4).abs() < 1e-12);
        assert!((exact_never_hit(&z(&nn), &GroupElement::Integer(1)).unwrap() - 4.0 / 7.0).abs() < 1e-12);
        assert!((exact_never_hit(&z(&nn), &GroupElement::Integer(3)).unwrap() - (1.0 - (3.0f64 / 7.0).powi(3))).abs() < 1e-12);
        assert_eq!(exact_never_hit(&z(&nn), &GroupElement::Integer(-2)), Some(0.0));

        let left = [(-1, 0.8), (2, 0.2)];
        let esc = 1.0 - truncated_hit(&left, 0, 3000, 400);
        assert!((exact_escape_rate(&z(&left)).unwrap() - esc).abs() < 1e-9, "{esc}");
        // upward jumps of 2 can skip +1
        assert_eq!(exact_never_hit(&z(&left), &GroupElement::Integer(1)), None);

        let right = [(1, 0.3), (-2, 0.7)];
        for t in [1, 2, 5] {
            let oracle = 1.0 - truncated_hit(&right, t, 3000, 400);
            let got = exact_never_hit(&z(&right), &GroupElement::Integer(t)).unwrap();
            assert!((got - oracle).abs() < 1e-9, "{t}: {got} vs {oracle}");
        }
        assert_eq!(exact_escape_rate(&z(&right)), None);
        // mirrored
        let up = [(1, 0.8), (-2, 0.2)];
        assert!((exact_escape_rate(&z(&up)).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(exact_escape_rate(&z(&[(-1, 0.5), (1, 0.5)])), Some(0.0));
    }

    #[test]
    fn closed_forms_on_other_groups() {
        let w = |s: &str| GroupElement::Word(letters_to_word(s).unwrap());
        let f2 = StepDistribution::new(
            GroupDescriptor::FreeGroup { rank: 2 },
            vec![(w("a"), 0.25), (w("A"), 0.25), (w("b"), 0.25), (w("B"), 0.25)],
        )
        .unwrap();
        assert!((exact_escape_rate(&f2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((exact_never_hit(&f2, &w("ab")).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(exact_escape_rate(&directed()), Some(1.0));
        let (a, b) = exact_h_gamma_lower_bound(&directed()).unwrap();
        assert!(matches!(a, GroupElement::Vector(_)));
        assert!((b.value - 0.5 * std::f64::consts::LN_2).abs() < 1e-15);
        let (a, b) = exact_h_gamma_lower_bound(&z(&[(-1, 0.7), (1, 0.3)])).unwrap();
        assert_eq!(a, GroupElement::Integer(-1));
        assert!((b.value - (-0.7f64 * 0.7f64.ln()) * (4.0 / 7.0) * 0.4).abs() < 1e-15);
    }
}
