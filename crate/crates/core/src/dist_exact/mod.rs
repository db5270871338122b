//! Exact finite-`n` laws of the range, the endpoint and the trace digraph.
//!
//! Two engines: a state-merging DP over `(R_n, S_n)` (interval states for
//! nearest-neighbour walks on `Z`, interned element sets otherwise) and path
//! enumeration for the trace digraph. `paths` holds plain brute force over
//! all step sequences for cross-checking both.

mod ball;
mod paths;
mod prob;
mod range_dp;
mod trace_enum;

use std::collections::BTreeMap;
use std::io::{self, Write};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::groups::{GroupElement, GroupEnumeration, GroupError, StepDistribution};
use crate::trace_codec::CodecError;
use crate::walk::{range_of, Trajectory, WalkError};

pub use paths::{path_range_law, path_trace_law};
pub use prob::{entropy_of, Arithmetic, CompensatedSum, Probability};
pub use range_dp::RangeOutcome;
pub use trace_enum::TransportReport;

#[derive(Debug, thiserror::Error)]
pub enum ExactError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("resource limit exceeded: more than {limit} {what}")]
    Resource { what: &'static str, limit: usize },
    #[error("exact arithmetic needs rational step probabilities")]
    NotRational,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactConfig {
    /// Maximum number of distinct states or outcomes held at once.
    pub max_states: usize,
    /// Maximum number of step sequences a path enumeration may visit.
    pub max_paths: usize,
    pub arithmetic: Arithmetic,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig { max_states: 10_000_000, max_paths: usize::try_from(1u64 << 32).unwrap_or(usize::MAX), arithmetic: Arithmetic::Double }
    }
}

#[cfg(feature = "parallel")]
pub(crate) fn par_map<I, T, F>(items: &[I], f: F) -> Result<Vec<T>, ExactError>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T, ExactError> + Sync,
{
    use rayon::prelude::*;
    items.par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<I, T, F>(items: &[I], f: F) -> Result<Vec<T>, ExactError>
where
    F: Fn(&I) -> Result<T, ExactError>,
{
    items.iter().map(f).collect()
}

/// Finite law keyed by canonical outcome bytes.
#[derive(Clone, Debug, PartialEq)]
pub struct LawTable<P = f64> {
    entries: BTreeMap<Vec<u8>, P>,
}

impl<P: Probability> LawTable<P> {
    pub fn from_map(entries: BTreeMap<Vec<u8>, P>) -> Self {
        LawTable { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &[u8]) -> Option<&P> {
        self.entries.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u8>, &P)> {
        self.entries.iter()
    }

    pub fn arithmetic(&self) -> Arithmetic {
        if P::is_exact() {
            Arithmetic::Rational
        } else {
            Arithmetic::Double
        }
    }

    pub fn total_mass(&self) -> P {
        let mut m = P::zero();
        for p in self.entries.values() {
            m.add_assign(p);
        }
        m
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(self.entries.values().map(P::to_f64))
    }

    /// Positive masses summing to one (exactly, or within 1e-12 for doubles).
    pub fn validate(&self) -> Result<(), ExactError> {
        if self.entries.values().any(|p| !(p.to_f64() > 0.0)) {
            return Err(ExactError::Inconsistent("non-positive mass in law table".into()));
        }
        let ok = if P::is_exact() {
            self.total_mass() == P::one()
        } else {
            let m: CompensatedSum = self.entries.values().map(P::to_f64).collect();
            (m.value() - 1.0).abs() <= 1e-12
        };
        if ok {
            Ok(())
        } else {
            Err(ExactError::Inconsistent(format!("total mass {}", self.total_mass().to_f64())))
        }
    }

    /// Marginal obtained by dropping the trailing endpoint index from keys.
    pub fn drop_endpoint(&self) -> LawTable<P> {
        let mut out: BTreeMap<Vec<u8>, P> = BTreeMap::new();
        for (k, p) in &self.entries {
            let head = k[..k.len().saturating_sub(8)].to_vec();
            match out.get_mut(&head) {
                Some(acc) => acc.add_assign(p),
                None => {
                    out.insert(head, p.clone());
                }
            }
        }
        LawTable { entries: out }
    }

    pub fn to_f64(&self) -> LawTable<f64> {
        LawTable { entries: self.entries.iter().map(|(k, p)| (k.clone(), p.to_f64())).collect() }
    }
}

impl LawTable<f64> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "key_hex,probability")?;
        for (k, p) in &self.entries {
            writeln!(w, "{},{:e}", hex::encode(k), p)?;
        }
        Ok(())
    }
}

impl LawTable<BigRational> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "key_hex,probability")?;
        for (k, p) in &self.entries {
            writeln!(w, "{},{}", hex::encode(k), p)?;
        }
        Ok(())
    }
}

/// Shannon entropy of a law, in nats.
pub fn entropy<P: Probability>(law: &LawTable<P>) -> f64 {
    law.entropy()
}

/// Total-variation distance `sup_A |P(A) - Q(A)|`.
pub fn tv_distance<P: Probability>(a: &LawTable<P>, b: &LawTable<P>) -> f64 {
    let mut acc = CompensatedSum::default();
    for (k, p) in &a.entries {
        let q = b.entries.get(k).map(P::to_f64).unwrap_or(0.0);
        acc.add((p.to_f64() - q).abs());
    }
    for (k, q) in &b.entries {
        if !a.entries.contains_key(k) {
            acc.add(q.to_f64());
        }
    }
    0.5 * acc.value()
}

/// Canonical key of a range set: count, then the sorted enumeration indices,
/// then optionally the endpoint index; all as big-endian `u64`.
pub fn range_key<'a>(
    enumeration: &GroupEnumeration,
    range: impl IntoIterator<Item = &'a GroupElement>,
    endpoint: Option<&GroupElement>,
) -> Result<Vec<u8>, ExactError> {
    let mut idx = range
        .into_iter()
        .map(|x| enumeration.index_of(x))
        .collect::<Result<Vec<u64>, _>>()?;
    idx.sort_unstable();
    let mut key = Vec::with_capacity(8 * (idx.len() + 2));
    key.extend_from_slice(&(idx.len() as u64).to_be_bytes());
    for i in idx {
        key.extend_from_slice(&i.to_be_bytes());
    }
    if let Some(x) = endpoint {
        key.extend_from_slice(&enumeration.index_of(x)?.to_be_bytes());
    }
    Ok(key)
}

/// All outcomes `(A, x, P(R_n = A, S_n = x))`, sorted by `(A, x)`.
pub fn range_outcomes<P: Probability>(
    mu: &StepDistribution,
    n: usize,
    config: &ExactConfig,
) -> Result<Vec<RangeOutcome<P>>, ExactError> {
    let req = range_dp::DpRequest { collect_at: Some(n), ..Default::default() };
    range_dp::range_dp::<P>(mu, n, config, &req, |_, _| {})?
        .ok_or_else(|| ExactError::Inconsistent("range DP produced no final level".into()))
}

/// Joint law of `(R_n, S_n)`.
pub fn law_range_endpoint<P: Probability>(
    mu: &StepDistribution,
    n: usize,
    config: &ExactConfig,
) -> Result<LawTable<P>, ExactError> {
    let enumeration = mu.group().enumeration();
    let mut entries = BTreeMap::new();
    for o in range_outcomes::<P>(mu, n, config)? {
        entries.insert(range_key(&enumeration, &o.range, Some(&o.endpoint))?, o.prob);
    }
    Ok(LawTable::from_map(entries))
}

/// Law of `R_n`.
pub fn law_range<P: Probability>(mu: &StepDistribution, n: usize, config: &ExactConfig) -> Result<LawTable<P>, ExactError> {
    Ok(law_range_endpoint::<P>(mu, n, config)?.drop_endpoint())
}

/// Law of `Gamma_n`, or of `(Gamma_n, S_n)`, keyed by canonical trace keys.
pub fn law_trace<P: Probability>(
    mu: &StepDistribution,
    n: usize,
    with_endpoint: bool,
    config: &ExactConfig,
) -> Result<LawTable<P>, ExactError> {
    trace_enum::trace_law::<P>(mu, n, with_endpoint, config)
}

/// Recomputes the trace law under the enumeration's structural keys and
/// compares it with the codec-keyed law.
pub fn trace_key_transport<P: Probability>(
    mu: &StepDistribution,
    n: usize,
    with_endpoint: bool,
    config: &ExactConfig,
) -> Result<TransportReport, ExactError> {
    trace_enum::trace_key_transport::<P>(mu, n, with_endpoint, config)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntropyTarget {
    Range,
    RangeEndpoint,
    Trace,
    TraceEndpoint,
}

impl EntropyTarget {
    pub const ALL: [EntropyTarget; 4] =
        [EntropyTarget::Range, EntropyTarget::RangeEndpoint, EntropyTarget::Trace, EntropyTarget::TraceEndpoint];
}

/// Entropy tracks for `n = 0..=n_max`; absent tracks were not requested.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropySequence {
    pub n_max: usize,
    pub step_entropy: f64,
    pub range: Option<Vec<f64>>,
    pub range_endpoint: Option<Vec<f64>>,
    pub trace: Option<Vec<f64>>,
    pub trace_endpoint: Option<Vec<f64>>,
}

impl EntropySequence {
    pub fn track(&self, target: EntropyTarget) -> Option<&[f64]> {
        match target {
            EntropyTarget::Range => self.range.as_deref(),
            EntropyTarget::RangeEndpoint => self.range_endpoint.as_deref(),
            EntropyTarget::Trace => self.trace.as_deref(),
            EntropyTarget::TraceEndpoint => self.trace_endpoint.as_deref(),
        }
    }

    /// `min_{1 <= n <= n_max} H(R_n, S_n) / n`. An upper proxy for the
    /// entropy rate; nothing is claimed about its distance to the limit.
    pub fn h_proxy(&self) -> Option<f64> {
        let rs = self.range_endpoint.as_ref()?;
        (1..rs.len()).map(|n| rs[n] / n as f64).min_by(f64::total_cmp)
    }

    /// Checks the structural inequalities between tracks and returns one
    /// message per failure.
    pub fn invariant_violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for t in EntropyTarget::ALL {
            if let Some(v) = self.track(t) {
                for (n, &h) in v.iter().enumerate() {
                    if !(h >= -tol) || !h.is_finite() {
                        out.push(format!("{t:?} negative at n={n}: {h}"));
                    }
                }
            }
        }
        let mut pair = |a: EntropyTarget, b: EntropyTarget, slack: &dyn Fn(usize) -> f64| {
            if let (Some(x), Some(y)) = (self.track(a), self.track(b)) {
                for n in 0..x.len().min(y.len()) {
                    if x[n] > y[n] + slack(n) + tol {
                        out.push(format!("{a:?} > {b:?} at n={n}: {} > {}", x[n], y[n] + slack(n)));
                    }
                }
            }
        };
        pair(EntropyTarget::Range, EntropyTarget::RangeEndpoint, &|_| 0.0);
        pair(EntropyTarget::Trace, EntropyTarget::TraceEndpoint, &|_| 0.0);
        pair(EntropyTarget::RangeEndpoint, EntropyTarget::TraceEndpoint, &|_| 0.0);
        pair(EntropyTarget::RangeEndpoint, EntropyTarget::Range, &|n| ((n + 1) as f64).ln());
        if let Some(rs) = &self.range_endpoint {
            for (n, &h) in rs.iter().enumerate() {
                if h > n as f64 * self.step_entropy + tol {
                    out.push(format!("H(R,S) above n H(X_1) at n={n}"));
                }
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,H_R,H_RS,H_G,H_GS")?;
        let cell = |t: Option<&Vec<f64>>, n: usize| t.map(|v| format!("{:.12}", v[n])).unwrap_or_default();
        for n in 0..=self.n_max {
            writeln!(
                w,
                "{n},{},{},{},{}",
                cell(self.range.as_ref(), n),
                cell(self.range_endpoint.as_ref(), n),
                cell(self.trace.as_ref(), n),
                cell(self.trace_endpoint.as_ref(), n)
            )?;
        }
        Ok(())
    }
}

/// Entropy tracks of the requested targets for `n = 0..=n_max`.
pub fn entropy_sequence(
    mu: &StepDistribution,
    n_max: usize,
    targets: &[EntropyTarget],
    config: &ExactConfig,
) -> Result<EntropySequence, ExactError> {
    match config.arithmetic {
        Arithmetic::Double => entropy_sequence_in::<f64>(mu, n_max, targets, config),
        Arithmetic::Rational => entropy_sequence_in::<BigRational>(mu, n_max, targets, config),
    }
}

fn entropy_sequence_in<P: Probability>(
    mu: &StepDistribution,
    n_max: usize,
    targets: &[EntropyTarget],
    config: &ExactConfig,
) -> Result<EntropySequence, ExactError> {
    let want = |t| targets.contains(&t);
    let mut seq = EntropySequence {
        n_max,
        step_entropy: mu.entropy(),
        range: None,
        range_endpoint: None,
        trace: None,
        trace_endpoint: None,
    };
    if want(EntropyTarget::Range) || want(EntropyTarget::RangeEndpoint) {
        let mut hr = vec![0.0; n_max + 1];
        let mut hrs = vec![0.0; n_max + 1];
        range_dp::range_dp::<P>(mu, n_max, config, &Default::default(), |n, st| {
            hr[n] = st.h_r;
            hrs[n] = st.h_rs;
        })?;
        if want(EntropyTarget::Range) {
            seq.range = Some(hr);
        }
        if want(EntropyTarget::RangeEndpoint) {
            seq.range_endpoint = Some(hrs);
        }
    }
    if want(EntropyTarget::Trace) || want(EntropyTarget::TraceEndpoint) {
        let mut hg = Vec::with_capacity(n_max + 1);
        let mut hgs = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let t = trace_enum::trace_entropies::<P>(mu, n, config)?;
            hg.push(t.h_gamma);
            hgs.push(t.h_gamma_end);
        }
        if want(EntropyTarget::Trace) {
            seq.trace = Some(hg);
        }
        if want(EntropyTarget::TraceEndpoint) {
            seq.trace_endpoint = Some(hgs);
        }
    }
    Ok(seq)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityViolation {
    pub track: EntropyTarget,
    pub n: usize,
    pub m: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub pairs_checked: usize,
    pub violations: Vec<SubadditivityViolation>,
}

impl SubadditivityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `H_{n+m} <= H_n + H_m` on the `(R,S)` and `(Gamma,S)` tracks.
pub fn check_subadditivity(seq: &EntropySequence, tol: f64) -> SubadditivityReport {
    let mut report = SubadditivityReport::default();
    for t in [EntropyTarget::RangeEndpoint, EntropyTarget::TraceEndpoint] {
        let Some(h) = seq.track(t) else { continue };
        for n in 0..h.len() {
            for m in n..h.len() - n {
                report.pairs_checked += 1;
                let (lhs, rhs) = (h[n + m], h[n] + h[m]);
                if lhs > rhs + tol {
                    report.violations.push(SubadditivityViolation { track: t, n, m, lhs, rhs });
                }
            }
        }
    }
    report
}

/// `(sum p_i ln^alpha(1/p_i), (alpha v ln n)^alpha + (alpha - 1)^alpha)`.
pub fn log_moment_bound(p: &[f64], alpha: f64) -> Result<(f64, f64), ExactError> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(ExactError::Invalid(format!("alpha must be >= 1, got {alpha}")));
    }
    if p.is_empty() || p.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(ExactError::Invalid("probabilities must lie in (0, 1]".into()));
    }
    let total: CompensatedSum = p.iter().copied().collect();
    if (total.value() - 1.0).abs() > 1e-9 {
        return Err(ExactError::Invalid(format!("probabilities sum to {}", total.value())));
    }
    let lhs: CompensatedSum = p.iter().map(|&x| x * (-x.ln()).max(0.0).powf(alpha)).collect();
    let rhs = alpha.max((p.len() as f64).ln()).powf(alpha) + (alpha - 1.0).powf(alpha);
    Ok((lhs.value(), rhs))
}

/// Result of [`log_moment_sweep`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LogMomentSweep {
    pub cases: usize,
    pub seed: u64,
    /// Case indices with `lhs > rhs`.
    pub violations: Vec<usize>,
    /// Largest `lhs / rhs`.
    pub max_ratio: f64,
}

impl LogMomentSweep {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Random law on `k <= 64` atoms with weights `u^s` (`u` uniform on
/// `(0, 1]`, `s` uniform on `[1, 8]`) and `alpha` uniform on `[1, 6]`.
pub fn log_moment_case(seed: u64, i: u64) -> (Vec<f64>, f64) {
    use rand::Rng;
    let mut rng = crate::stream::RngStreamSpec::new(seed, i).rng();
    let k = rng.random_range(1..=64usize);
    let s: f64 = rng.random_range(1.0..=8.0);
    let w: Vec<f64> = (0..k).map(|_| (1.0 - rng.random::<f64>()).powf(s)).collect();
    let z: f64 = w.iter().sum();
    let alpha = rng.random_range(1.0..=6.0);
    (w.into_iter().map(|x| x / z).collect(), alpha)
}

pub fn log_moment_sweep(cases: usize, seed: u64) -> Result<LogMomentSweep, ExactError> {
    let mut out = LogMomentSweep { cases, seed, ..Default::default() };
    for i in 0..cases {
        let (p, alpha) = log_moment_case(seed, i as u64);
        let (lhs, rhs) = log_moment_bound(&p, alpha)?;
        out.max_ratio = out.max_ratio.max(lhs / rhs);
        if lhs > rhs {
            out.violations.push(i);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalReport {
    pub n: usize,
    /// `H(S_n | R_n)`.
    pub endpoint_given_range: f64,
    /// `ln(n + 1)`.
    pub entropy_bound: f64,
    /// Largest `sum_x P(x|A) ln^2 P(x|A)` over range values `A`.
    pub max_log_square_moment: f64,
    /// `ln^2(n + 1) + 5`.
    pub moment_bound: f64,
    pub holds: bool,
}

/// Conditional endpoint diagnostics for every `n = 0..=n_max` from one DP run.
pub fn conditional_endpoint_sequence(
    mu: &StepDistribution,
    n_max: usize,
    config: &ExactConfig,
) -> Result<Vec<ConditionalReport>, ExactError> {
    let req = range_dp::DpRequest { conditional: true, ..Default::default() };
    let mut out = Vec::with_capacity(n_max + 1);
    range_dp::range_dp::<f64>(mu, n_max, config, &req, |n, st| {
        let l = ((n + 1) as f64).ln();
        let endpoint_given_range = (st.h_rs - st.h_r).max(0.0);
        let moment_bound = l * l + 5.0;
        out.push(ConditionalReport {
            n,
            endpoint_given_range,
            entropy_bound: l,
            max_log_square_moment: st.max_log_square_moment,
            moment_bound,
            holds: endpoint_given_range <= l + 1e-12 && st.max_log_square_moment <= moment_bound,
        });
    })?;
    Ok(out)
}

pub fn conditional_endpoint_diagnostics(
    mu: &StepDistribution,
    n: usize,
    config: &ExactConfig,
) -> Result<ConditionalReport, ExactError> {
    conditional_endpoint_sequence(mu, n, config)?
        .pop()
        .ok_or_else(|| ExactError::Inconsistent("empty diagnostic sequence".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub n: usize,
    /// `E |d_g R_n|` with `d_g A = {x in A : x g not in A}`.
    pub expected_boundary: f64,
    /// `-(E|d_g R_n| - 1) ln(1 - mu(g))`.
    pub bound: f64,
    pub range_entropy: f64,
    pub holds: bool,
}

/// Boundary lower bound for every `n = 0..=n_max` from one DP run.
pub fn boundary_sequence(
    mu: &StepDistribution,
    n_max: usize,
    g: &GroupElement,
    config: &ExactConfig,
) -> Result<Vec<BoundaryReport>, ExactError> {
    let mg = mu.prob(g);
    let step = match mu.position(g) {
        Some(i) if !mu.group().is_identity(g) && mg < 1.0 => i,
        _ => {
            return Err(ExactError::Invalid(format!("{g} must be a non-identity support element of mass < 1")));
        }
    };
    let req = range_dp::DpRequest { boundary_step: Some(step), ..Default::default() };
    let mut out = Vec::with_capacity(n_max + 1);
    range_dp::range_dp::<f64>(mu, n_max, config, &req, |n, st| {
        let bound = -(st.expected_boundary - 1.0) * (1.0 - mg).ln();
        out.push(BoundaryReport {
            n,
            expected_boundary: st.expected_boundary,
            bound,
            range_entropy: st.h_r,
            holds: st.h_r >= bound - 1e-12,
        });
    })?;
    Ok(out)
}

pub fn boundary_lower_bound(
    mu: &StepDistribution,
    n: usize,
    g: &GroupElement,
    config: &ExactConfig,
) -> Result<BoundaryReport, ExactError> {
    boundary_sequence(mu, n, g, config)?
        .pop()
        .ok_or_else(|| ExactError::Inconsistent("empty diagnostic sequence".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AepReport {
    pub values: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

/// `-ln q_n(R_n, S_n) / n` for each trajectory, looked up in the exact law.
pub fn aep_samples<P: Probability>(
    mu: &StepDistribution,
    n: usize,
    law: &LawTable<P>,
    trajs: &[Trajectory],
) -> Result<AepReport, ExactError> {
    let group = mu.group();
    let enumeration = group.enumeration();
    let mut values = Vec::with_capacity(trajs.len());
    for t in trajs {
        if t.len() != n {
            return Err(ExactError::Inconsistent(format!("trajectory has {} steps, law is for n={n}", t.len())));
        }
        let r = range_of(group, t);
        let key = range_key(&enumeration, r.visited.elements().iter(), Some(&r.endpoint))?;
        let q = law
            .get(&key)
            .ok_or_else(|| ExactError::Inconsistent("trajectory outcome missing from law".into()))?
            .to_f64();
        values.push(if n == 0 { 0.0 } else { -q.ln() / n as f64 });
    }
    let k = values.len() as f64;
    let mean = if values.is_empty() { 0.0 } else { values.iter().sum::<f64>() / k };
    let variance = if values.len() < 2 {
        0.0
    } else {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)
    };
    Ok(AepReport { values, mean, variance })
}

/// Total-variation distance between the law of `S_n^{-1} R_n` and the law
/// of the range of the reversed walk.
pub fn reversal_law_check(mu: &StepDistribution, n: usize, config: &ExactConfig) -> Result<f64, ExactError> {
    let group = mu.group();
    let enumeration = group.enumeration();
    let mut shifted: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    for o in range_outcomes::<f64>(mu, n, config)? {
        let inv = group.inverse(&o.endpoint);
        let moved: Vec<GroupElement> = o.range.iter().map(|a| group.mul(&inv, a)).collect::<Result<_, _>>()?;
        *shifted.entry(range_key(&enumeration, &moved, None)?).or_insert(0.0) += o.prob;
    }
    let reversed = law_range::<f64>(&mu.reversed(), n, config)?;
    Ok(tv_distance(&LawTable::from_map(shifted), &reversed))
}

#[cfg(test)]
mod tests;
