//! State-merging dynamic program over `(R_n, S_n)`.

use smallvec::SmallVec;

use crate::groups::{GroupDescriptor, GroupElement, StepDistribution};

use super::ball::CayleyBall;
use super::prob::{entropy_of, CompensatedSum, Probability};
use super::{ExactConfig, ExactError};

/// One outcome of the joint range/endpoint law.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeOutcome<P> {
    /// Visited elements in `Ord` order.
    pub range: Vec<GroupElement>,
    pub endpoint: GroupElement,
    pub prob: P,
}

/// Optional per-level statistics.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct DpRequest {
    /// Collect `max_A sum_x P(x|A) ln^2 P(x|A)`.
    pub conditional: bool,
    /// Support index of `g` for `E |d_g R_n|`.
    pub boundary_step: Option<usize>,
    /// Level whose outcomes are returned in full.
    pub collect_at: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct LevelStats {
    pub h_r: f64,
    pub h_rs: f64,
    pub max_log_square_moment: f64,
    pub expected_boundary: f64,
}

trait Repr {
    /// States sort by range first, so equal ranges are contiguous.
    type State: Clone + Ord;
    fn init(&self) -> Self::State;
    fn advance(&self, st: &Self::State, step: usize) -> Self::State;
    fn same_range(&self, a: &Self::State, b: &Self::State) -> bool;
    fn boundary(&self, st: &Self::State, step: usize) -> usize;
    fn outcome(&self, st: &Self::State) -> (Vec<GroupElement>, GroupElement);
}

struct IntervalRepr {
    deltas: Vec<i64>,
}

impl Repr for IntervalRepr {
    type State = (i64, i64, i64);

    fn init(&self) -> Self::State {
        (0, 0, 0)
    }

    fn advance(&self, &(lo, hi, pos): &Self::State, step: usize) -> Self::State {
        let pos = pos + self.deltas[step];
        (lo.min(pos), hi.max(pos), pos)
    }

    fn same_range(&self, a: &Self::State, b: &Self::State) -> bool {
        (a.0, a.1) == (b.0, b.1)
    }

    fn boundary(&self, &(lo, hi, _): &Self::State, step: usize) -> usize {
        // x + g leaves [lo, hi] for the |g| extreme points on one side
        (self.deltas[step].unsigned_abs() as usize).min((hi - lo + 1) as usize)
    }

    fn outcome(&self, &(lo, hi, pos): &Self::State) -> (Vec<GroupElement>, GroupElement) {
        ((lo..=hi).map(GroupElement::Integer).collect(), GroupElement::Integer(pos))
    }
}

type Ids = SmallVec<[u32; 16]>;

struct SetRepr {
    ball: CayleyBall,
}

impl Repr for SetRepr {
    type State = (Ids, u32);

    fn init(&self) -> Self::State {
        (SmallVec::from_slice(&[0]), 0)
    }

    fn advance(&self, (ids, end): &Self::State, step: usize) -> Self::State {
        let end = self.ball.next(*end, step);
        let mut ids = ids.clone();
        if let Err(at) = ids.binary_search(&end) {
            ids.insert(at, end);
        }
        (ids, end)
    }

    fn same_range(&self, a: &Self::State, b: &Self::State) -> bool {
        a.0 == b.0
    }

    fn boundary(&self, (ids, _): &Self::State, step: usize) -> usize {
        ids.iter().filter(|&&x| ids.binary_search(&self.ball.next(x, step)).is_err()).count()
    }

    fn outcome(&self, (ids, end): &Self::State) -> (Vec<GroupElement>, GroupElement) {
        let mut range: Vec<GroupElement> = ids.iter().map(|&i| self.ball.elements[i as usize].clone()).collect();
        range.sort();
        (range, self.ball.elements[*end as usize].clone())
    }
}

fn nearest_neighbour_steps(mu: &StepDistribution) -> Option<Vec<i64>> {
    if *mu.group() != GroupDescriptor::IntegerLine {
        return None;
    }
    mu.elements()
        .map(|x| match x {
            GroupElement::Integer(v) if v.abs() <= 1 => Some(*v),
            _ => None,
        })
        .collect()
}

fn level_stats<R: Repr, P: Probability>(repr: &R, level: &[(R::State, P)], req: &DpRequest) -> LevelStats {
    let h_rs = entropy_of(level.iter().map(|(_, p)| p.to_f64()));
    let mut h_r = CompensatedSum::default();
    let mut stats = LevelStats::default();
    let mut boundary = CompensatedSum::default();
    for group in level.chunk_by(|a, b| repr.same_range(&a.0, &b.0)) {
        let mut mass = P::zero();
        for (_, p) in group {
            mass.add_assign(p);
        }
        let pa = mass.to_f64();
        let la = pa.ln();
        h_r.add(-pa * la);
        if req.conditional {
            let m: CompensatedSum = group
                .iter()
                .map(|(_, p)| {
                    let q = p.to_f64() / pa;
                    if q > 0.0 && q < 1.0 {
                        q * q.ln() * q.ln()
                    } else {
                        0.0
                    }
                })
                .collect();
            stats.max_log_square_moment = stats.max_log_square_moment.max(m.value());
        }
        if let Some(step) = req.boundary_step {
            boundary.add(pa * repr.boundary(&group[0].0, step) as f64);
        }
    }
    stats.h_r = h_r.value().max(0.0);
    stats.h_rs = h_rs;
    stats.expected_boundary = boundary.value();
    stats
}

fn run<R: Repr, P: Probability>(
    repr: &R,
    masses: &[P],
    n_max: usize,
    cap: usize,
    req: &DpRequest,
    visit: &mut dyn FnMut(usize, &LevelStats),
) -> Result<Option<Vec<RangeOutcome<P>>>, ExactError> {
    let mut collected = None;
    let mut level: Vec<(R::State, P)> = vec![(repr.init(), P::one())];
    for n in 0..=n_max {
        if n > 0 {
            let mut next: Vec<(R::State, P)> = Vec::with_capacity(level.len() * masses.len());
            for (state, p) in &level {
                for (s, m) in masses.iter().enumerate() {
                    next.push((repr.advance(state, s), p.mul(m)));
                }
            }
            drop(level);
            next.sort_unstable_by(|a, b| a.0.cmp(&b.0));
            merge_sorted(&mut next);
            if next.len() > cap {
                return Err(ExactError::Resource { what: "range states", limit: cap });
            }
            level = next;
        }
        visit(n, &level_stats(repr, &level, req));
        if req.collect_at == Some(n) {
            let mut out: Vec<RangeOutcome<P>> = level
                .iter()
                .map(|(st, p)| {
                    let (range, endpoint) = repr.outcome(st);
                    RangeOutcome { range, endpoint, prob: p.clone() }
                })
                .collect();
            out.sort_by(|a, b| (&a.range, &a.endpoint).cmp(&(&b.range, &b.endpoint)));
            collected = Some(out);
        }
    }
    Ok(collected)
}

/// Merges runs of equal states in a sorted vector, adding their masses.
fn merge_sorted<S: Eq, P: Probability>(v: &mut Vec<(S, P)>) {
    if v.is_empty() {
        return;
    }
    let mut w = 0;
    for r in 1..v.len() {
        if v[r].0 == v[w].0 {
            let p = v[r].1.clone();
            v[w].1.add_assign(&p);
        } else {
            w += 1;
            v.swap(w, r);
        }
    }
    v.truncate(w + 1);
}

/// Runs the DP for `n = 0..=n_max`, calling `visit` with each level's
/// statistics, and returns the outcomes of level `req.collect_at` if set.
pub(crate) fn range_dp<P: Probability>(
    mu: &StepDistribution,
    n_max: usize,
    config: &ExactConfig,
    req: &DpRequest,
    mut visit: impl FnMut(usize, &LevelStats),
) -> Result<Option<Vec<RangeOutcome<P>>>, ExactError> {
    let masses = P::step_masses(mu)?;
    let cap = config.max_states;
    match nearest_neighbour_steps(mu) {
        Some(deltas) => run(&IntervalRepr { deltas }, &masses, n_max, cap, req, &mut visit),
        None => {
            // one extra layer so that x * g is known for every visited x
            let radius = n_max + usize::from(req.boundary_step.is_some());
            let repr = SetRepr { ball: CayleyBall::build(mu, radius, cap)? };
            run(&repr, &masses, n_max, cap, req, &mut visit)
        }
    }
}
