//! All-time supremum of a skip-free-to-the-left walk on ℤ with negative drift.
//!
//! With `q = p_{-1}`, `p_{k+} = sum_{l >= k} p_l` and `f_n = P(eta = n)`:
//! `f_0 = -m / q` and `f_n = sum_{k=1}^n p_{k+} f_{n-k} / q`.

use std::io::{self, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist_exact::CompensatedSum;
use crate::estimate_mc::{McConfig, McError};
use crate::groups::{GroupDescriptor, GroupElement, StepDistribution, MASS_TOLERANCE};
use crate::stream::RngStreamSpec;
use crate::walk::StepSampler;

#[derive(Debug, Error)]
pub enum LadderError {
    #[error("walk does not escape to -infinity (drift {0} >= 0)")]
    NotEscaping(f64),
    #[error("measure is not skip-free to the left: {0}")]
    NotSkipFree(String),
    #[error("invalid measure: {0}")]
    Invalid(String),
    #[error("insufficient precision: {0}")]
    Precision(String),
    #[error("tail cannot be certified")]
    UnknownTail,
    #[error(transparent)]
    Mc(#[from] McError),
}

/// Closed interval used for certified quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn point(x: f64) -> Self {
        Bounds { lo: x, hi: x }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn add(self, o: Bounds) -> Bounds {
        Bounds { lo: self.lo + o.lo, hi: self.hi + o.hi }
    }
}

/// Parametric upward tail `p_k = mass * g(k) / Z` for `k >= start`, with
/// `Z = sum_{k >= start} g(k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TailRule {
    /// `g(k) = k^-exponent`, exponent > 2.
    PowerLaw { start: u64, exponent: f64, mass: f64 },
    /// `g(k) = 1 / (k^2 ln^2 k)`, start >= 2.
    PowerLog { start: u64, mass: f64 },
}

impl TailRule {
    fn start(&self) -> u64 {
        match *self {
            TailRule::PowerLaw { start, .. } | TailRule::PowerLog { start, .. } => start,
        }
    }

    fn mass(&self) -> f64 {
        match *self {
            TailRule::PowerLaw { mass, .. } | TailRule::PowerLog { mass, .. } => mass,
        }
    }

    fn g(&self, k: f64) -> f64 {
        match *self {
            TailRule::PowerLaw { exponent, .. } => k.powf(-exponent),
            TailRule::PowerLog { .. } => 1.0 / (k * k * k.ln().powi(2)),
        }
    }

    /// `sum_{k >= m} g(k)` bracketed by the integral test.
    fn remainder(&self, m: f64) -> Bounds {
        let int = match *self {
            TailRule::PowerLaw { exponent: s, .. } => {
                let v = m.powf(1.0 - s) / (s - 1.0);
                Bounds::point(v)
            }
            TailRule::PowerLog { .. } => {
                // d/dx [-1/(x ln^2 x)] = g(x) (1 + 2 / ln x)
                let l = m.ln();
                let up = 1.0 / (m * l * l);
                Bounds { lo: up / (1.0 + 2.0 / l), hi: up }
            }
        };
        Bounds { lo: int.lo, hi: int.hi + self.g(m) }
    }

    /// `sum_{k >= m} k g(k)` bracketed by the integral test.
    fn first_moment_remainder(&self, m: f64) -> Bounds {
        let lo = match *self {
            TailRule::PowerLaw { exponent: s, .. } => m.powf(2.0 - s) / (s - 2.0),
            TailRule::PowerLog { .. } => 1.0 / m.ln(),
        };
        Bounds { lo, hi: lo + m * self.g(m) }
    }
}

/// Explicit terms summed before switching to integral remainders.
const EXPLICIT_TERMS: u64 = 1 << 20;

/// Step law of `X_1` on `{-1, 0, 1, 2, ...}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkipFreeMeasure {
    q: f64,
    /// `p_0, p_1, ...` before the tail rule starts.
    head: Vec<f64>,
    tail: Option<TailRule>,
    /// Certified `Z` of the tail rule.
    norm: Option<Bounds>,
}

impl SkipFreeMeasure {
    pub fn new(q: f64, head: Vec<f64>, tail: Option<TailRule>) -> Result<Self, LadderError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(LadderError::Invalid(format!("q = {q} must lie in (0, 1)")));
        }
        if head.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(LadderError::Invalid("head probabilities must be finite and nonnegative".into()));
        }
        let mut m = SkipFreeMeasure { q, head, tail, norm: None };
        if let Some(rule) = tail {
            let start = rule.start();
            if (start as usize) < m.head.len() || start < 1 {
                return Err(LadderError::Invalid("tail rule must start after the head".into()));
            }
            match rule {
                TailRule::PowerLaw { exponent, .. } if !(exponent > 2.0) => {
                    return Err(LadderError::Invalid("power-law tail needs exponent > 2 for a finite drift".into()))
                }
                TailRule::PowerLog { start, .. } if start < 2 => {
                    return Err(LadderError::Invalid("power-log tail starts at k >= 2".into()))
                }
                _ => {}
            }
            if !(rule.mass() > 0.0 && rule.mass() < 1.0) {
                return Err(LadderError::Invalid("tail mass must lie in (0, 1)".into()));
            }
            m.head.resize(start as usize, 0.0);
            m.norm = Some(m.suffix_g(start));
        }
        let total = q + m.head.iter().sum::<f64>() + tail.map_or(0.0, |t| t.mass());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(LadderError::Invalid(format!("total mass {total} != 1")));
        }
        Ok(m)
    }

    /// Normalizes a finitely supported ℤ measure through its witness: negates
    /// the support when the walk is skip-free to the right.
    pub fn from_measure(mu: &StepDistribution) -> Result<Self, LadderError> {
        if *mu.group() != GroupDescriptor::IntegerLine {
            return Err(LadderError::NotSkipFree("group is not the integer line".into()));
        }
        let atoms: Vec<(i64, f64)> = mu
            .support()
            .iter()
            .map(|(x, p)| match x {
                GroupElement::Integer(v) => (*v, *p),
                _ => unreachable!("integer line elements"),
            })
            .collect();
        let mean: f64 = atoms.iter().map(|&(x, p)| x as f64 * p).sum();
        let (left, right) = (atoms.iter().all(|&(x, _)| x >= -1), atoms.iter().all(|&(x, _)| x <= 1));
        // with both orientations available, the escaping one is meant
        let sign = if left && (!right || mean < 0.0) {
            1
        } else if right {
            -1
        } else {
            return Err(LadderError::NotSkipFree("jumps of size >= 2 in both directions".into()));
        };
        let q = atoms.iter().filter(|&&(x, _)| x * sign == -1).map(|&(_, p)| p).sum::<f64>();
        if q <= 0.0 {
            return Err(LadderError::NotSkipFree("no mass on a^-1".into()));
        }
        let top = atoms.iter().map(|&(x, _)| x * sign).max().unwrap_or(0).max(0) as usize;
        let mut head = vec![0.0; top + 1];
        for &(x, p) in &atoms {
            if x * sign >= 0 {
                head[(x * sign) as usize] += p;
            }
        }
        SkipFreeMeasure::new(q, head, None)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn tail_rule(&self) -> Option<TailRule> {
        self.tail
    }

    pub fn is_finite_support(&self) -> bool {
        self.tail.is_none()
    }

    /// Largest jump for finite support.
    pub fn max_jump(&self) -> Option<usize> {
        if self.tail.is_some() {
            return None;
        }
        Some(self.head.iter().rposition(|&p| p > 0.0).unwrap_or(0))
    }

    /// `p_k` for `k >= 0`.
    pub fn p(&self, k: u64) -> f64 {
        if (k as usize) < self.head.len() {
            return self.head[k as usize];
        }
        match (self.tail, self.norm) {
            (Some(rule), Some(z)) if k >= rule.start() => rule.mass() * rule.g(k as f64) / z.mid(),
            _ => 0.0,
        }
    }

    fn suffix_g(&self, from: u64) -> Bounds {
        let rule = self.tail.expect("tail rule");
        let from = from.max(rule.start());
        let end = from.max(EXPLICIT_TERMS);
        let explicit: CompensatedSum = (from..end).rev().map(|k| rule.g(k as f64)).collect();
        rule.remainder(end as f64).add(Bounds::point(explicit.value()))
    }

    /// `p_{k+}` for `k = 0..=k_max`, certified.
    pub fn p_plus_bounds(&self, k_max: usize) -> Vec<Bounds> {
        let head_len = self.head.len();
        let mut out = vec![Bounds::point(0.0); k_max + 1];
        // tail part
        if let (Some(rule), Some(z)) = (self.tail, self.norm) {
            let start = rule.start() as usize;
            let scale_lo = rule.mass() / z.hi;
            let scale_hi = rule.mass() / z.lo;
            let end = (k_max + 1).max(start);
            let mut acc = self.suffix_g(end as u64);
            let mut k = end;
            while k > 0 {
                k -= 1;
                if k < start {
                    break;
                }
                acc = acc.add(Bounds::point(rule.g(k as f64)));
                if k <= k_max {
                    out[k] = Bounds { lo: acc.lo * scale_lo, hi: acc.hi * scale_hi };
                }
            }
            let at_start = Bounds { lo: acc.lo * scale_lo, hi: acc.hi * scale_hi };
            for slot in out.iter_mut().take(start.min(k_max + 1)) {
                *slot = at_start;
            }
        }
        // head part
        let mut acc = 0.0;
        let mut head_suffix = vec![0.0; head_len + 1];
        for k in (0..head_len).rev() {
            acc += self.head[k];
            head_suffix[k] = acc;
        }
        for (k, slot) in out.iter_mut().enumerate() {
            if k < head_len {
                *slot = slot.add(Bounds::point(head_suffix[k]));
            }
        }
        out
    }

    /// Point values of `p_{k+}` for `k = 0..=k_max`.
    pub fn p_plus(&self, k_max: usize) -> Vec<f64> {
        if self.tail.is_none() {
            let mut out = vec![0.0; k_max + 1];
            let mut acc = 0.0;
            for k in (0..self.head.len()).rev() {
                acc += self.head[k];
                if k <= k_max {
                    out[k] = acc;
                }
            }
            return out;
        }
        self.p_plus_bounds(k_max).iter().map(Bounds::mid).collect()
    }

    /// `E[X_1^+] = P̄(1)`, certified.
    pub fn upward_mean(&self) -> Bounds {
        let head: f64 = self.head.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let mut total = Bounds::point(head);
        if let (Some(rule), Some(z)) = (self.tail, self.norm) {
            let start = rule.start();
            let end = start.max(EXPLICIT_TERMS);
            let explicit: CompensatedSum = (start..end).rev().map(|k| k as f64 * rule.g(k as f64)).collect();
            let s = rule.first_moment_remainder(end as f64).add(Bounds::point(explicit.value()));
            total = total.add(Bounds { lo: s.lo * rule.mass() / z.hi, hi: s.hi * rule.mass() / z.lo });
        }
        total
    }

    /// `m = -q + E[X_1^+]`.
    pub fn drift(&self) -> Bounds {
        let u = self.upward_mean();
        Bounds { lo: u.lo - self.q, hi: u.hi - self.q }
    }

    /// `P(t) = sum_{k >= 0} p_k t^k` for `t` in `[0, 1)`.
    pub fn pgf(&self, t: f64) -> f64 {
        let mut s = CompensatedSum::default();
        let mut k = 0u64;
        let mut tk = 1.0;
        loop {
            let pk = self.p(k);
            s.add(pk * tk);
            k += 1;
            tk *= t;
            if (k as usize >= self.head.len() && self.tail.is_none()) || tk < 1e-20 || k > 1 << 24 {
                break;
            }
        }
        s.value()
    }

    /// `P̄(t) = sum_{n >= 1} p_{n+} t^n` for `t` in `[0, 1)`, or any `t > 0`
    /// with finite support.
    pub fn pbar(&self, t: f64) -> f64 {
        let k_max = match self.max_jump() {
            Some(k) => k,
            None => {
                // terms below 1e-20 relative are dropped
                let n = if t <= 0.0 { 1 } else { (-(1e-20f64).ln() / -t.ln()).ceil() as usize + 1 };
                n.min(1 << 24)
            }
        };
        let pp = self.p_plus(k_max);
        let mut s = CompensatedSum::default();
        let mut tn = 1.0;
        for p in pp.iter().skip(1) {
            tn *= t;
            s.add(p * tn);
        }
        s.value()
    }
}

/// Partial law `f_0..f_N` of `eta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupremumLaw {
    pub f: Vec<f64>,
    /// `1 - sum_{n <= N} f_n`.
    pub tail_mass: f64,
    pub n: usize,
}

impl SupremumLaw {
    pub fn f0(&self) -> f64 {
        self.f[0]
    }

    /// Indices where `f_n >= p_{n+} f_0 / q` fails beyond rounding.
    pub fn lower_bound_violations(&self, mu: &SkipFreeMeasure) -> Vec<usize> {
        let pp = mu.p_plus(self.n);
        (1..=self.n)
            .filter(|&n| {
                let lb = pp[n] * self.f[0] / mu.q();
                self.f[n] < lb * (1.0 - 1e-12) - 1e-300
            })
            .collect()
    }

    /// CSV with header `n,f_n,cum,partial_H`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,f_n,cum,partial_H")?;
        let mut cum = CompensatedSum::default();
        let mut h = CompensatedSum::default();
        for (n, &f) in self.f.iter().enumerate() {
            cum.add(f);
            if f > 0.0 {
                h.add(-f * f.ln());
            }
            writeln!(w, "{n},{f:e},{:.15},{:.15}", cum.value(), h.value())?;
        }
        Ok(())
    }
}

/// `f_0 = -m / q`.
pub fn f0(mu: &SkipFreeMeasure) -> Result<f64, LadderError> {
    let m = mu.drift();
    if m.hi >= 0.0 {
        return Err(LadderError::NotEscaping(m.mid()));
    }
    Ok(-m.mid() / mu.q())
}

fn f0_bounds(mu: &SkipFreeMeasure) -> Result<Bounds, LadderError> {
    let m = mu.drift();
    if m.hi >= 0.0 {
        return Err(LadderError::NotEscaping(m.mid()));
    }
    Ok(Bounds { lo: -m.hi / mu.q(), hi: -m.lo / mu.q() })
}

/// `f_0..f_N` by the renewal recursion.
pub fn supremum_law(mu: &SkipFreeMeasure, n: usize) -> Result<SupremumLaw, LadderError> {
    let f0 = f0(mu)?;
    let pp = mu.p_plus(n);
    let reach = mu.max_jump().unwrap_or(n).min(n);
    let mut f = Vec::with_capacity(n + 1);
    f.push(f0);
    for i in 1..=n {
        let s: CompensatedSum = (1..=i.min(reach)).map(|k| pp[k] * f[i - k]).collect();
        f.push(s.value() / mu.q());
    }
    let total: CompensatedSum = f.iter().copied().collect();
    Ok(SupremumLaw { tail_mass: (1.0 - total.value()).max(0.0), f, n })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GfRow {
    pub t: f64,
    pub partial: f64,
    /// `q f_0 (1 - t) / (q + t P(t) - t)`.
    pub via_pgf: f64,
    /// `q f_0 / (q - P̄(t))`.
    pub via_pbar: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GfReport {
    pub rows: Vec<GfRow>,
    pub max_residual: f64,
    /// Largest gap between the two closed forms.
    pub max_form_gap: f64,
}

const GF_TRUNCATION: f64 = 1e-10;

/// Compares `sum_{n <= N} f_n t^n` with both closed forms of `F(t)`.
pub fn check_generating_function(mu: &SkipFreeMeasure, law: &SupremumLaw, t_grid: &[f64]) -> Result<GfReport, LadderError> {
    let q = mu.q();
    let f0 = law.f0();
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t > 0.0 && t < 1.0) {
            return Err(LadderError::Invalid(format!("t = {t} must lie in (0, 1)")));
        }
        let cut = law.tail_mass * t.powi(law.n as i32 + 1);
        if cut > GF_TRUNCATION {
            return Err(LadderError::Precision(format!(
                "truncation bound {cut:.3e} at t = {t} exceeds {GF_TRUNCATION:e}; increase N"
            )));
        }
        let mut s = CompensatedSum::default();
        let mut tn = 1.0;
        for &f in &law.f {
            s.add(f * tn);
            tn *= t;
        }
        let partial = s.value();
        let via_pgf = q * f0 * (1.0 - t) / (q + t * mu.pgf(t) - t);
        let via_pbar = q * f0 / (q - mu.pbar(t));
        let residual = (partial - via_pgf).abs().max((partial - via_pbar).abs());
        rows.push(GfRow { t, partial, via_pgf, via_pbar, residual });
    }
    Ok(GfReport {
        max_residual: rows.iter().map(|r| r.residual).fold(0.0, f64::max),
        max_form_gap: rows.iter().map(|r| (r.via_pgf - r.via_pbar).abs()).fold(0.0, f64::max),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailClass {
    Finite,
    Infinite,
}

/// Status of `E[|X_1| ln |X_1|]`, which decides whether `H(R_inf)` is finite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailCriterion {
    pub x_log_x: TailClass,
    pub range_entropy_finite: bool,
}

pub fn tail_criterion(mu: &SkipFreeMeasure) -> Result<TailCriterion, LadderError> {
    let x_log_x = match mu.tail_rule() {
        None => TailClass::Finite,
        // sum k ln k k^-s converges iff s > 2
        Some(TailRule::PowerLaw { exponent, .. }) if exponent > 2.0 => TailClass::Finite,
        Some(TailRule::PowerLaw { .. }) => return Err(LadderError::UnknownTail),
        // sum k ln k / (k^2 ln^2 k) = sum 1 / (k ln k) diverges
        Some(TailRule::PowerLog { .. }) => TailClass::Infinite,
    };
    Ok(TailCriterion { x_log_x, range_entropy_finite: x_log_x == TailClass::Finite })
}

/// `C = e^-1 + 2 sum_{n >= 2} ln n / n^2`, certified.
pub fn lemma_constant() -> Bounds {
    static C: OnceLock<Bounds> = OnceLock::new();
    *C.get_or_init(|| {
        const M: u64 = 1_000_000;
        let s: CompensatedSum = (2..=M).rev().map(|n| (n as f64).ln() / (n as f64 * n as f64)).collect();
        // ln x / x^2 decreases for x >= 2; its antiderivative is -(ln x + 1) / x
        let tail = |x: f64| (x.ln() + 1.0) / x;
        let (m, m1) = (M as f64, (M + 1) as f64);
        let base = (-1.0f64).exp() + 2.0 * s.value();
        Bounds { lo: base + 2.0 * tail(m1), hi: base + 2.0 * tail(m) }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaEntropy {
    /// `sum_{n <= N} -f_n ln f_n`.
    pub partial: f64,
    /// Certified bound on the omitted terms; `None` when unbounded.
    pub tail_bound: Option<f64>,
    pub criterion: TailCriterion,
}

impl EtaEntropy {
    pub fn interval(&self) -> Option<Bounds> {
        self.tail_bound.map(|b| Bounds { lo: self.partial, hi: self.partial + b })
    }
}

fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Upper bound on `-f ln f` given `f <= u`.
fn phi_upper(u: f64) -> f64 {
    if u >= (-1.0f64).exp() {
        (-1.0f64).exp()
    } else {
        phi(u)
    }
}

/// Geometric tail for finite support: `f_n <= F(t) t^-n` with `P̄(t) < q`.
fn geometric_tail_bound(mu: &SkipFreeMeasure, law: &SupremumLaw) -> Option<f64> {
    let q = mu.q();
    let p1 = mu.pbar(1.0);
    if mu.max_jump() == Some(0) {
        return Some(0.0);
    }
    let target = 0.5 * (q + p1);
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    while mu.pbar(hi) < target {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mu.pbar(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = lo;
    let big_f = q * law.f0() / (q - mu.pbar(t));
    let c = t.ln();
    let mut s = CompensatedSum::default();
    let mut n = law.n + 1;
    loop {
        let u = big_f * (-c * n as f64).exp();
        let term = phi_upper(u);
        s.add(term);
        // terms are eventually decreasing with ratio below rho
        if u < 1e-3 {
            let ratio = (-c).exp() * (1.0 + c / (c * n as f64 - big_f.ln()).max(c));
            if ratio < 1.0 && term < 1e-30 {
                s.add(term * ratio / (1.0 - ratio));
                break;
            }
        }
        n += 1;
        if n > law.n + 100_000_000 {
            return None;
        }
    }
    Some(s.value())
}

/// Power-law tails through the entropy/log-moment comparison.
fn lemma_tail_bound(mu: &SkipFreeMeasure, law: &SupremumLaw) -> Result<Option<f64>, LadderError> {
    let (rule, z) = match (mu.tail_rule(), mu.norm) {
        (Some(r @ TailRule::PowerLaw { .. }), Some(z)) => (r, z),
        _ => return Ok(None),
    };
    let TailRule::PowerLaw { exponent: s, .. } = rule else { unreachable!() };
    let n = law.n.max(2) as f64;
    let f0 = f0_bounds(mu)?.lo;
    let q = mu.q();
    // sum_{n > N} 2 ln n / n^2
    let log_sq = 2.0 * ((n + 1.0).ln() / ((n + 1.0) * (n + 1.0)) + ((n + 1.0).ln() + 1.0) / (n + 1.0));
    // p_{k++} upper bounds for k <= K, then a power remainder
    let k_cut = EXPLICIT_TERMS as usize;
    let pp = mu.p_plus_bounds(k_cut);
    let c_tail = rule.mass() / z.lo * (1.0 + 1.0 / (s - 1.0));
    let pp_rem = c_tail * ((k_cut as f64).powf(1.0 - s) + (k_cut as f64).powf(2.0 - s) / (s - 2.0));
    let mut ppp = pp_rem;
    let mut weighted = CompensatedSum::default();
    for k in (1..=k_cut).rev() {
        ppp += pp[k].hi;
        weighted.add(ppp / (k as f64 + n));
    }
    // sum_{k > K} p_{k++} / (k + N) with p_{k++} <= D k^{2-s}
    let d = c_tail * (1.0 + 1.0 / (s - 2.0));
    let kc = k_cut as f64;
    weighted.add(d * (kc.powf(1.0 - s) + kc.powf(2.0 - s) / (s - 2.0)));
    let tail_log = law.tail_mass * n.ln() + (2.0 * n + 1.0) / n * weighted.value() / (q * f0);
    Ok(Some(log_sq + 2.0 * tail_log))
}

/// Partial `H(eta)` with a certified remainder when `E X ln X < inf`.
pub fn entropy_eta(mu: &SkipFreeMeasure, law: &SupremumLaw) -> Result<EtaEntropy, LadderError> {
    let criterion = tail_criterion(mu)?;
    let partial: CompensatedSum = law.f.iter().map(|&f| phi(f)).collect();
    let tail_bound = match criterion.x_log_x {
        TailClass::Infinite => None,
        TailClass::Finite if mu.is_finite_support() => geometric_tail_bound(mu, law),
        TailClass::Finite => lemma_tail_bound(mu, law)?,
    };
    Ok(EtaEntropy { partial: partial.value().max(0.0), tail_bound, criterion })
}

/// Lower bound on `sum_{lo < n <= hi} -f_n ln f_n` from `f_n >= p_{n+} f_0 / q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub n_lo: usize,
    pub n_hi: usize,
    pub lower_bound: f64,
    /// Exact prefix used to show `f_n <= 1/e` beyond `n_lo`.
    pub prefix: usize,
    pub prefix_tail_mass: f64,
    pub valid: bool,
}

const GROWTH_PREFIX: usize = 4096;

pub fn entropy_growth_lower_bound(mu: &SkipFreeMeasure, n_lo: usize, n_hi: usize) -> Result<GrowthReport, LadderError> {
    if n_hi <= n_lo {
        return Err(LadderError::Invalid("need n_lo < n_hi".into()));
    }
    let prefix = n_lo.min(GROWTH_PREFIX);
    let law = supremum_law(mu, prefix)?;
    // every later f_n is at most the unassigned mass
    let valid = law.tail_mass <= (-1.0f64).exp();
    let f0 = f0_bounds(mu)?.lo;
    let pp = mu.p_plus_bounds(n_hi);
    let s: CompensatedSum = (n_lo + 1..=n_hi).map(|n| phi(pp[n].lo * f0 / mu.q())).collect();
    Ok(GrowthReport {
        n_lo,
        n_hi,
        lower_bound: if valid { s.value() } else { 0.0 },
        prefix,
        prefix_tail_mass: law.tail_mass,
        valid,
    })
}

/// Both sides of the entropy/log-moment comparison for a law on `{1, 2, ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralBoundsReport {
    pub entropy: f64,
    pub expected_log: f64,
    pub constant: Bounds,
    /// `H(Y) <= C + 2 E ln Y`.
    pub upper_holds: bool,
    pub nonincreasing: bool,
    /// `E ln Y <= H(Y)`; checked when `p` is nonincreasing.
    pub lower_holds: Option<bool>,
}

/// `p[i]` is `P(Y = i + 1)`.
pub fn entropy_integral_bounds(p: &[f64]) -> Result<IntegralBoundsReport, LadderError> {
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(LadderError::Invalid("probabilities must be finite and nonnegative".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(LadderError::Invalid(format!("total mass {total} != 1")));
    }
    let entropy: CompensatedSum = p.iter().map(|&x| phi(x)).collect();
    let elog: CompensatedSum = p.iter().enumerate().map(|(i, &x)| x * ((i + 1) as f64).ln()).collect();
    let (h, e) = (entropy.value().max(0.0), elog.value());
    let c = lemma_constant();
    let slack = 1e-12 * (1.0 + h);
    let nonincreasing = p.windows(2).all(|w| w[1] <= w[0]);
    Ok(IntegralBoundsReport {
        entropy: h,
        expected_log: e,
        constant: c,
        upper_holds: h <= c.hi + 2.0 * e + slack,
        nonincreasing,
        lower_holds: nonincreasing.then_some(e <= h + slack),
    })
}

/// Result of [`integral_bounds_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralBoundsSweep {
    pub cases: usize,
    pub seed: u64,
    pub constant: Bounds,
    pub upper_violations: Vec<usize>,
    pub lower_checked: usize,
    pub lower_violations: Vec<usize>,
}

impl IntegralBoundsSweep {
    pub fn holds(&self) -> bool {
        self.upper_violations.is_empty() && self.lower_violations.is_empty()
    }
}

/// Random law on `{1, ..., k}`, `k <= 4096`: weights `i^-beta` times noise
/// `u^s`. Even cases are sorted nonincreasing, odd cases are left as drawn.
pub fn integral_bounds_case(seed: u64, i: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = RngStreamSpec::new(seed, i).rng();
    let k = 1usize << rng.random_range(0..=12u32);
    let k = rng.random_range(k.div_ceil(2)..=k);
    let beta: f64 = rng.random_range(0.0..=3.0);
    let s: f64 = rng.random_range(0.0..=4.0);
    let mut w: Vec<f64> =
        (1..=k).map(|j| (j as f64).powf(-beta) * (1.0 - rng.random::<f64>()).powf(s)).collect();
    if i % 2 == 0 {
        w.sort_by(|a, b| b.total_cmp(a));
    }
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

pub fn integral_bounds_sweep(cases: usize, seed: u64) -> Result<IntegralBoundsSweep, LadderError> {
    let mut out = IntegralBoundsSweep {
        cases,
        seed,
        constant: lemma_constant(),
        upper_violations: Vec::new(),
        lower_checked: 0,
        lower_violations: Vec::new(),
    };
    for i in 0..cases {
        let r = entropy_integral_bounds(&integral_bounds_case(seed, i as u64))?;
        if !r.upper_holds {
            out.upper_violations.push(i);
        }
        if let Some(ok) = r.lower_holds {
            out.lower_checked += 1;
            if !ok {
                out.lower_violations.push(i);
            }
        }
    }
    Ok(out)
}

/// Empirical law of `max_{k <= N} S_k` against the computed `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupremumCheck {
    pub horizon: u64,
    pub samples: u64,
    pub empirical: Vec<f64>,
    pub tv: f64,
    /// Mean of `P(eta >= M_N - S_N)` over paths: the chance a later excursion
    /// would raise the running maximum.
    pub truncation_bias: f64,
    /// TV between `f` and the law of `max(0, X_1 + eta')` with `eta'` drawn
    /// from the empirical law.
    pub recursion_tv: f64,
}

fn tv_to_law(empirical: &[f64], law: &SupremumLaw) -> f64 {
    let len = empirical.len().max(law.f.len());
    let mut s = law.tail_mass;
    for i in 0..len {
        let a = empirical.get(i).copied().unwrap_or(0.0);
        let b = law.f.get(i).copied().unwrap_or(0.0);
        s += (a - b).abs();
    }
    0.5 * s
}

/// `+1` when the law is used as given, `-1` when mirrored.
fn orientation(mu: &StepDistribution) -> i64 {
    let mean: f64 = mu.support().iter().map(|(x, p)| if let GroupElement::Integer(v) = x { *v as f64 * p } else { 0.0 }).sum();
    let left = mu.elements().all(|x| matches!(x, GroupElement::Integer(v) if *v >= -1));
    if left && mean < 0.0 || !mu.elements().all(|x| matches!(x, GroupElement::Integer(v) if *v <= 1)) {
        1
    } else {
        -1
    }
}

/// Monte Carlo check of the supremum law on a finitely supported step law.
pub fn mc_supremum_check(
    mu: &StepDistribution,
    law: &SupremumLaw,
    horizon: u64,
    samples: u64,
    cfg: &McConfig,
) -> Result<SupremumCheck, LadderError> {
    let norm = SkipFreeMeasure::from_measure(mu)?;
    let sign = orientation(mu);
    let deltas: Vec<i64> = mu
        .elements()
        .map(|x| match x {
            GroupElement::Integer(v) => v * sign,
            _ => unreachable!("integer line elements"),
        })
        .collect();
    let sampler = StepSampler::new(mu);
    // P(eta >= j) from the computed law, unassigned mass counted as above
    let mut upper = vec![0.0; law.f.len() + 1];
    upper[law.f.len()] = law.tail_mass;
    for j in (0..law.f.len()).rev() {
        upper[j] = upper[j + 1] + law.f[j];
    }
    let streams = crate::estimate_mc::stream_sizes(samples, cfg.streams);
    let run = |(j, m): (usize, u64)| {
        let mut rng = RngStreamSpec::new(cfg.seed, j as u64).rng();
        let mut counts: Vec<u64> = Vec::new();
        let mut bias = CompensatedSum::default();
        let mut draws = sampler.draws(&mut rng);
        for _ in 0..m {
            let (mut s, mut top) = (0i64, 0i64);
            for _ in 0..horizon {
                s += deltas[draws.next_index()];
                top = top.max(s);
            }
            let t = top as usize;
            if counts.len() <= t {
                counts.resize(t + 1, 0);
            }
            counts[t] += 1;
            let gap = (top - s) as usize;
            bias.add(upper.get(gap).copied().unwrap_or(law.tail_mass));
        }
        (counts, bias.value())
    };
    let jobs: Vec<(usize, u64)> = streams.into_iter().enumerate().collect();
    #[cfg(feature = "parallel")]
    let parts: Vec<(Vec<u64>, f64)> = {
        use rayon::prelude::*;
        jobs.into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(Vec<u64>, f64)> = jobs.into_iter().map(run).collect();
    let mut counts: Vec<u64> = Vec::new();
    let mut bias = CompensatedSum::default();
    for (c, b) in parts {
        if counts.len() < c.len() {
            counts.resize(c.len(), 0);
        }
        for (t, x) in counts.iter_mut().zip(c) {
            *t += x;
        }
        bias.add(b);
    }
    let total = samples.max(1) as f64;
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    // law of max(0, X_1 + eta')
    let mut conv = vec![0.0; empirical.len() + norm.max_jump().unwrap_or(0) + 1];
    for (x, p) in mu.elements().zip(mu.probabilities()) {
        let GroupElement::Integer(v) = x else { unreachable!() };
        let d = v * sign;
        for (j, &e) in empirical.iter().enumerate() {
            let y = (j as i64 + d).max(0) as usize;
            conv[y] += p * e;
        }
    }
    Ok(SupremumCheck {
        horizon,
        samples,
        tv: tv_to_law(&empirical, law),
        truncation_bias: bias.value() / total,
        recursion_tv: tv_to_law(&conv, law),
        empirical,
    })
}
