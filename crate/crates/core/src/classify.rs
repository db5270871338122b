//! Recurrence classification, vanishing predictions and finite-n reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist_exact::{self, Arithmetic, EntropySequence, EntropyTarget, ExactConfig, ExactError};
use crate::estimate_mc::{escape_rate, hitting_tail, HittingEstimate, McConfig, McError};
use crate::groups::{GroupDescriptor, GroupElement, StepDistribution, Word, MASS_TOLERANCE};
use crate::stream::RngStreamSpec;
use crate::walk::{range_of, sample_trajectory};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("unsupported group: {0}")]
    UnsupportedGroup(String),
    #[error("no strictly positive grading exists for this measure")]
    NoCertificate,
    #[error("no prediction is available for an unknown class")]
    Unpredictable,
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Mc(#[from] McError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ClassKind {
    Recurrent,
    /// Escapes with no left jump relative to the witness `a`.
    TransientNoLeftJump { witness: GroupElement },
    TransientOther,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkClass {
    pub kind: ClassKind,
    /// Criteria applied, in order.
    pub evidence: Vec<String>,
    /// Escape estimates attached when the table gives no answer.
    pub escape: Option<Vec<HittingEstimate>>,
}

impl WalkClass {
    fn new(kind: ClassKind, evidence: Vec<String>) -> Self {
        WalkClass { kind, evidence, escape: None }
    }
}

/// Witness data for the no-left-jump condition on ℤ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeftJumpWitness {
    /// `+1` or `-1`.
    pub a: i64,
    /// `sum_i i mu(a^i)`.
    pub drift: f64,
    /// Whether `supp(mu)` equals `{a^-1, e, a, a^2, ...}` as a set; never
    /// true for a finite support, where only the subset reading applies.
    pub set_equality: bool,
}

fn integer_atoms(mu: &StepDistribution) -> Option<Vec<(i64, f64)>> {
    mu.support()
        .iter()
        .map(|(x, p)| match x {
            GroupElement::Integer(v) => Some((*v, *p)),
            _ => None,
        })
        .collect()
}

/// Full witness check for a measure on ℤ.
pub fn no_left_jump_witness(mu: &StepDistribution) -> Result<Option<LeftJumpWitness>, ClassifyError> {
    let atoms = integer_atoms(mu)
        .filter(|_| *mu.group() == GroupDescriptor::IntegerLine)
        .ok_or_else(|| ClassifyError::UnsupportedGroup("no-left-jump detection needs the integer line".into()))?;
    for a in [1i64, -1] {
        // exponents i with x = a^i
        let exps: Vec<(i64, f64)> = atoms.iter().map(|&(x, p)| (x * a, p)).collect();
        let down = exps.iter().find(|&&(i, _)| i == -1).map_or(0.0, |&(_, p)| p);
        if exps.iter().any(|&(i, _)| i < -1) || down <= 0.0 {
            continue;
        }
        let drift: f64 = exps.iter().map(|&(i, p)| i as f64 * p).sum();
        if drift < -MASS_TOLERANCE {
            return Ok(Some(LeftJumpWitness { a, drift, set_equality: false }));
        }
    }
    Ok(None)
}

/// Returns `a` in `{+1, -1}` with `supp(mu) ⊆ {a^-1, e, a, a^2, ...}`,
/// `mu(a^-1) > 0` and negative drift in the exponent.
pub fn detect_no_left_jump(mu: &StepDistribution) -> Result<Option<i64>, ClassifyError> {
    Ok(no_left_jump_witness(mu)?.map(|w| w.a))
}

/// Rewrites walks on `ℤ^1` and `F_1` as walks on the integer line.
fn as_integer_line(mu: &StepDistribution) -> Option<(StepDistribution, fn(i64) -> GroupElement)> {
    fn vector(a: i64) -> GroupElement {
        GroupElement::Vector([a].into_iter().collect())
    }
    fn word(a: i64) -> GroupElement {
        GroupElement::Word(Word::from_slice(&[a as i8]))
    }
    fn integer(a: i64) -> GroupElement {
        GroupElement::Integer(a)
    }
    let (lift, back): (fn(&GroupElement) -> i64, fn(i64) -> GroupElement) = match mu.group() {
        GroupDescriptor::IntegerLine => return Some((mu.clone(), integer)),
        GroupDescriptor::IntegerLattice { dim: 1 } => (|x| if let GroupElement::Vector(v) = x { v[0] } else { 0 }, vector),
        GroupDescriptor::FreeGroup { rank: 1 } => {
            (|x| if let GroupElement::Word(w) = x { w.iter().map(|&s| i64::from(s.signum())).sum() } else { 0 }, word)
        }
        _ => return None,
    };
    let atoms = mu.support().iter().map(|(x, p)| (GroupElement::Integer(lift(x)), *p)).collect();
    StepDistribution::new(GroupDescriptor::IntegerLine, atoms).ok().map(|m| (m, back))
}

fn mean_vector(mu: &StepDistribution, dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim];
    for (x, p) in mu.support() {
        if let GroupElement::Vector(v) = x {
            for (mi, c) in m.iter_mut().zip(v.iter()) {
                *mi += *c as f64 * p;
            }
        }
    }
    m
}

/// Decision table over the supported group kinds.
pub fn classify(mu: &StepDistribution) -> WalkClass {
    let group = mu.group();
    if let Some((line, back)) = as_integer_line(mu) {
        let mut evidence = Vec::new();
        if *group != GroupDescriptor::IntegerLine {
            evidence.push(format!("{group:?} is isomorphic to the integer line"));
        }
        let mean: f64 = integer_atoms(&line).unwrap_or_default().iter().map(|&(x, p)| x as f64 * p).sum();
        if mean.abs() <= MASS_TOLERANCE {
            evidence.push("finite support on ℤ with zero mean: recurrent".into());
            return WalkClass::new(ClassKind::Recurrent, evidence);
        }
        evidence.push(format!("finite support on ℤ with mean {mean:.6}: transient"));
        return match no_left_jump_witness(&line) {
            Ok(Some(w)) => {
                evidence.push(format!(
                    "supp ⊆ {{a^-1, e, a, a^2, ...}} with a = {}, drift {:.6} < 0 (subset reading; set equality fails for finite support)",
                    w.a, w.drift
                ));
                WalkClass::new(ClassKind::TransientNoLeftJump { witness: back(w.a) }, evidence)
            }
            _ => {
                evidence.push("no witness a in {+1, -1}".into());
                WalkClass::new(ClassKind::TransientOther, evidence)
            }
        };
    }
    match group {
        GroupDescriptor::IntegerLattice { dim: 2 } => {
            let m = mean_vector(mu, 2);
            if m.iter().all(|c| c.abs() <= MASS_TOLERANCE) {
                WalkClass::new(ClassKind::Recurrent, vec!["two-dimensional finite support with zero mean: recurrent".into()])
            } else {
                WalkClass::new(ClassKind::TransientOther, vec![format!("ℤ^2 with nonzero mean {m:?}: transient")])
            }
        }
        GroupDescriptor::IntegerLattice { dim } => {
            WalkClass::new(ClassKind::TransientOther, vec![format!("generating measure on ℤ^{dim}, d >= 3: transient")])
        }
        GroupDescriptor::FreeGroup { rank } => WalkClass::new(
            ClassKind::TransientOther,
            vec![format!("generating measure on the free group of rank {rank} >= 2: transient")],
        ),
        GroupDescriptor::FiniteCyclicProduct { .. } => {
            WalkClass::new(ClassKind::Recurrent, vec!["finite group: recurrent".into()])
        }
        GroupDescriptor::IntegerLine => unreachable!("handled above"),
    }
}

/// Classification with escape estimates attached when the table is silent.
pub fn classify_with_evidence(
    mu: &StepDistribution,
    horizons: &[u64],
    samples: u64,
    cfg: &McConfig,
) -> Result<WalkClass, ClassifyError> {
    let mut class = classify(mu);
    if class.kind == ClassKind::Unknown {
        class.escape = Some(escape_rate(mu, horizons, samples, cfg)?);
    }
    Ok(class)
}

/// `(h_R = 0, h_Gamma = 0)`.
pub fn predict_vanishing(class: &ClassKind) -> Result<(bool, bool), ClassifyError> {
    match class {
        ClassKind::Recurrent => Ok((true, true)),
        ClassKind::TransientNoLeftJump { .. } => Ok((true, false)),
        ClassKind::TransientOther => Ok((false, false)),
        ClassKind::Unknown => Err(ClassifyError::Unpredictable),
    }
}

/// Simulation evidence that should agree with a class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corroboration {
    pub escape: Vec<HittingEstimate>,
    /// Tails of `tau_{a^-1}` for no-left-jump walks.
    pub witness_tail: Option<Vec<HittingEstimate>>,
    pub consistent: bool,
}

/// Checks the class against truncated escape (and witness hitting) estimates.
pub fn corroborate(
    mu: &StepDistribution,
    class: &ClassKind,
    horizons: &[u64],
    samples: u64,
    cfg: &McConfig,
) -> Result<Corroboration, ClassifyError> {
    let escape = escape_rate(mu, horizons, samples, cfg)?;
    let last = escape.last().map_or(1.0, |e| e.estimate);
    let mut witness_tail = None;
    let consistent = match class {
        ClassKind::Recurrent => last <= 0.05 && escape.iter().all(|e| e.non_increasing_in_horizon),
        ClassKind::TransientNoLeftJump { witness } => {
            let tail = hitting_tail(mu, &mu.group().inverse(witness), horizons, samples, cfg)?;
            let ok = tail.last().is_some_and(|t| t.estimate < 0.02);
            witness_tail = Some(tail);
            last > 0.1 && ok
        }
        ClassKind::TransientOther => last > 0.1,
        ClassKind::Unknown => false,
    };
    Ok(Corroboration { escape, witness_tail, consistent })
}

/// Homomorphism to ℤ given by weights on the generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grading {
    pub weights: Vec<i64>,
}

impl Grading {
    pub fn value(&self, x: &GroupElement) -> i64 {
        match x {
            GroupElement::Integer(v) => self.weights[0] * v,
            GroupElement::Vector(v) => v.iter().zip(&self.weights).map(|(a, b)| a * b).sum(),
            GroupElement::Word(w) => {
                w.iter().map(|&s| s.signum() as i64 * self.weights[s.unsigned_abs() as usize - 1]).sum()
            }
            GroupElement::Residues(_) => 0,
        }
    }
}

const GRADING_BOX: i64 = 3;

/// Smallest (by L1 norm) grading with every support element strictly
/// positive, searched in a bounded box of weights.
pub fn find_grading(mu: &StepDistribution) -> Option<Grading> {
    let coords = match mu.group() {
        GroupDescriptor::IntegerLine => 1,
        GroupDescriptor::IntegerLattice { dim } => *dim,
        GroupDescriptor::FreeGroup { rank } => *rank,
        GroupDescriptor::FiniteCyclicProduct { .. } => return None,
    };
    let bound = if coords <= 6 { GRADING_BOX } else { 1 };
    let width = (2 * bound + 1) as u64;
    let total = width.checked_pow(coords as u32)?;
    let mut best: Option<(i64, Grading)> = None;
    for code in 0..total {
        let mut c = code;
        let weights: Vec<i64> = (0..coords)
            .map(|_| {
                let w = (c % width) as i64 - bound;
                c /= width;
                w
            })
            .collect();
        let g = Grading { weights };
        if mu.elements().all(|x| g.value(x) > 0) {
            let norm = g.weights.iter().map(|w| w.abs()).sum();
            if best.as_ref().is_none_or(|(b, _)| norm < *b) {
                best = Some((norm, g));
            }
        }
    }
    best.map(|(_, g)| g)
}

/// Exact check that the range carries the whole path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaOneReport {
    pub grading: Grading,
    pub n_max: usize,
    pub step_entropy: f64,
    pub range: Vec<f64>,
    pub range_endpoint: Vec<f64>,
    pub max_deviation: f64,
    /// Per `n`, whether distinct paths have distinct ranges (checked when
    /// the path count is small enough to enumerate).
    pub ranges_injective: Vec<Option<bool>>,
    pub trajectories_checked: usize,
    pub reconstructed: usize,
    pub holds: bool,
}

const INJECTIVITY_PATHS: f64 = 1e6;

/// Reads the steps back from a range ordered by grading.
pub fn reconstruct_steps(group: &GroupDescriptor, grading: &Grading, range: &[GroupElement]) -> Vec<GroupElement> {
    let mut sorted: Vec<&GroupElement> = range.iter().collect();
    sorted.sort_by_key(|x| grading.value(x));
    sorted.windows(2).map(|w| group.mul(&group.inverse(w[0]), w[1]).expect("elements of one group")).collect()
}

/// Verifies `H(R_n) = H(R_n, S_n) = n H(X_1)` for `n <= n_max` and path
/// reconstruction from the range on sampled trajectories.
pub fn check_gamma_escape_one(
    mu: &StepDistribution,
    n_max: usize,
    config: &ExactConfig,
    trajectories: usize,
    seed: u64,
    tol: f64,
) -> Result<GammaOneReport, ClassifyError> {
    let grading = find_grading(mu).ok_or(ClassifyError::NoCertificate)?;
    let seq = dist_exact::entropy_sequence(mu, n_max, &[EntropyTarget::Range, EntropyTarget::RangeEndpoint], config)?;
    let h = mu.entropy();
    let range = seq.range.clone().unwrap_or_default();
    let range_endpoint = seq.range_endpoint.clone().unwrap_or_default();
    let mut max_deviation: f64 = 0.0;
    for (n, (r, rs)) in range.iter().zip(&range_endpoint).enumerate() {
        let want = n as f64 * h;
        max_deviation = max_deviation.max((r - want).abs()).max((rs - want).abs());
    }
    let mut ranges_injective = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if (mu.len() as f64).powi(n as i32) > INJECTIVITY_PATHS {
            ranges_injective.push(None);
            continue;
        }
        let law = match config.arithmetic {
            Arithmetic::Double => dist_exact::law_range::<f64>(mu, n, config)?.len(),
            Arithmetic::Rational => dist_exact::law_range::<num_rational::BigRational>(mu, n, config)?.len(),
        };
        ranges_injective.push(Some(law as u64 == (mu.len() as u64).pow(n as u32)));
    }
    let group = mu.group();
    let mut reconstructed = 0;
    for i in 0..trajectories {
        let traj = sample_trajectory(mu, n_max, RngStreamSpec::new(seed, i as u64));
        let range = range_of(group, &traj).visited.elements();
        if reconstruct_steps(group, &grading, &range) == traj.steps {
            reconstructed += 1;
        }
    }
    let holds = max_deviation <= tol
        && reconstructed == trajectories
        && ranges_injective.iter().all(|x| x.unwrap_or(true));
    Ok(GammaOneReport {
        grading,
        n_max,
        step_entropy: h,
        range,
        range_endpoint,
        max_deviation,
        ranges_injective,
        trajectories_checked: trajectories,
        reconstructed,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub h_r_zero: bool,
    pub h_gamma_zero: bool,
    /// `h_R = H(X_1)`, predicted when a grading certificate exists.
    pub h_r_full: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub range_endpoint: Option<f64>,
    pub trace_endpoint: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub class: ClassKind,
    pub prediction: Prediction,
    /// `H(., S_n) / n` for `n >= 1`.
    pub rates: Vec<RateRow>,
    pub lower_bound: Option<f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct TrendOptions {
    /// Constant `c` with `h_Gamma >= c`.
    pub lower_bound: Option<f64>,
    pub tolerance: f64,
    /// Strict-decrease margin for vanishing rates.
    pub margin: f64,
    pub full_rate: bool,
}

impl Default for TrendOptions {
    fn default() -> Self {
        TrendOptions { lower_bound: None, tolerance: 0.01, margin: 1e-9, full_rate: false }
    }
}

fn rate(track: Option<&[f64]>, n: usize) -> Option<f64> {
    track.and_then(|t| t.get(n)).map(|h| h / n as f64)
}

/// Finite-n consequences of the predictions for `class`.
pub fn trend_report(seq: &EntropySequence, class: &ClassKind, opts: &TrendOptions) -> Result<TheoremReport, ClassifyError> {
    let (h_r_zero, h_gamma_zero) = predict_vanishing(class)?;
    let prediction = Prediction { h_r_zero, h_gamma_zero, h_r_full: opts.full_rate };
    let rs = seq.track(EntropyTarget::RangeEndpoint);
    let gs = seq.track(EntropyTarget::TraceEndpoint);
    let rates: Vec<RateRow> = (1..=seq.n_max)
        .map(|n| RateRow { n, range_endpoint: rate(rs, n), trace_endpoint: rate(gs, n) })
        .collect();
    let mut checks = Vec::new();

    if let (false, Some(c)) = (h_gamma_zero, opts.lower_bound) {
        let floor = c - opts.tolerance;
        let worst = rates.iter().filter_map(|r| r.trace_endpoint).fold(f64::INFINITY, f64::min);
        checks.push(Check {
            name: "trace-rate-above-lower-bound".into(),
            passed: gs.is_some() && worst >= floor,
            detail: format!("min_n H(Gamma_n,S_n)/n = {worst:.6} vs c - tol = {floor:.6}"),
        });
    }
    // the largest doubling pair m -> 2m within range
    let m = seq.n_max / 2;
    let mut doubling = |name: &str, track: Option<&[f64]>| {
        let (a, b) = (rate(track, m), rate(track, 2 * m));
        let passed = match (a, b) {
            (Some(a), Some(b)) if m >= 1 => b < a - opts.margin,
            _ => false,
        };
        checks.push(Check {
            name: name.into(),
            passed,
            detail: match (a, b) {
                (Some(a), Some(b)) => format!("rate at n = {m}: {a:.6}, at n = {}: {b:.6}", 2 * m),
                _ => format!("track missing or n_max = {} too small", seq.n_max),
            },
        });
    };
    if h_r_zero {
        doubling("range-rate-strictly-decreasing", rs);
    }
    if h_gamma_zero {
        doubling("trace-rate-strictly-decreasing", gs);
    }
    if opts.full_rate {
        let worst = rates
            .iter()
            .filter_map(|r| r.range_endpoint)
            .map(|x| (x - seq.step_entropy).abs())
            .fold(0.0, f64::max);
        checks.push(Check {
            name: "range-rate-equals-step-entropy".into(),
            passed: rs.is_some() && worst <= opts.tolerance,
            detail: format!("max_n |H(R_n,S_n)/n - H(X_1)| = {worst:.3e}"),
        });
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(TheoremReport { class: class.clone(), prediction, rates, lower_bound: opts.lower_bound, checks, passed })
}
