//! Trajectories, ranges and trace digraphs of a walk `S_k = S_{k-1} X_k`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{GroupDescriptor, GroupElement, GroupError, StepDistribution};
use crate::stream::RngStreamSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("trajectory positions are inconsistent with its steps at k = {0}")]
    Inconsistent(usize),
    #[error("vertex {0} is not reachable from the identity")]
    Unreachable(String),
}

/// Draws support indices of a step distribution from raw 64-bit words.
#[derive(Clone, Debug)]
pub struct StepSampler {
    // cumulative thresholds in units of 2^-64; the last one is implicit
    thresholds: Vec<u64>,
    // exact lookup when every probability is a multiple of 2^-bits
    table: Option<(u32, Vec<u8>)>,
}

const TABLE_BITS: u32 = 8;

impl StepSampler {
    pub fn new(mu: &StepDistribution) -> Self {
        let mut acc = 0.0f64;
        let mut thresholds = Vec::with_capacity(mu.len().saturating_sub(1));
        for p in mu.probabilities().iter().take(mu.len() - 1) {
            acc += p;
            let t = (acc * 18_446_744_073_709_551_616.0).min(u64::MAX as f64);
            thresholds.push(t as u64);
        }
        StepSampler { thresholds, table: dyadic_table(mu) }
    }

    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.next_u64();
        // thresholds increase, so the count of those <= u is the index
        self.thresholds.iter().map(|&t| usize::from(u >= t)).sum()
    }

    /// A draw source that spends only the needed bits per step when the
    /// probabilities are dyadic.
    pub fn draws<'a, R: RngCore + ?Sized>(&'a self, rng: &'a mut R) -> StepDraws<'a, R> {
        StepDraws { sampler: self, rng, buf: 0, left: 0 }
    }
}

fn dyadic_table(mu: &StepDistribution) -> Option<(u32, Vec<u8>)> {
    if mu.len() > 256 {
        return None;
    }
    let scale = f64::from(1u32 << TABLE_BITS);
    let mut units = Vec::with_capacity(mu.len());
    for p in mu.probabilities() {
        let u = p * scale;
        if u.fract() != 0.0 {
            return None;
        }
        units.push(u as u32);
    }
    if units.iter().sum::<u32>() != 1 << TABLE_BITS {
        return None;
    }
    // coarsest resolution that still represents every probability
    let shift = units.iter().filter(|&&u| u > 0).map(|u| u.trailing_zeros()).min()?;
    let bits = TABLE_BITS - shift;
    let mut table = Vec::with_capacity(1 << bits);
    for (i, &u) in units.iter().enumerate() {
        table.extend(std::iter::repeat_n(i as u8, (u >> shift) as usize));
    }
    Some((bits, table))
}

/// Buffered draws from a [`StepSampler`].
pub struct StepDraws<'a, R: ?Sized> {
    sampler: &'a StepSampler,
    rng: &'a mut R,
    buf: u64,
    left: u32,
}

impl<R: RngCore + ?Sized> StepDraws<'_, R> {
    #[inline]
    pub fn next_index(&mut self) -> usize {
        match &self.sampler.table {
            Some((bits, table)) => {
                if self.left < *bits {
                    self.buf = self.rng.next_u64();
                    self.left = 64;
                }
                let i = (self.buf & ((1u64 << bits) - 1)) as usize;
                self.buf >>= bits;
                self.left -= bits;
                table[i] as usize
            }
            None => self.sampler.sample(self.rng),
        }
    }
}

/// Steps `X_1..X_n` and positions `S_0..S_n` of one walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<GroupElement>,
    pub positions: Vec<GroupElement>,
    pub stream: Option<RngStreamSpec>,
}

impl Trajectory {
    /// Builds the trajectory generated by the given steps.
    pub fn from_steps(group: &GroupDescriptor, steps: Vec<GroupElement>) -> Result<Self, WalkError> {
        let mut positions = Vec::with_capacity(steps.len() + 1);
        let mut cur = group.identity();
        positions.push(cur.clone());
        for x in &steps {
            cur = group.mul(&cur, x)?;
            positions.push(cur.clone());
        }
        Ok(Trajectory { steps, positions, stream: None })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn endpoint(&self) -> &GroupElement {
        self.positions.last().expect("positions always hold S_0")
    }

    pub fn validate(&self, group: &GroupDescriptor) -> Result<(), WalkError> {
        if self.positions.len() != self.steps.len() + 1 || !group.is_identity(&self.positions[0]) {
            return Err(WalkError::Inconsistent(0));
        }
        for (k, x) in self.steps.iter().enumerate() {
            if group.mul(&self.positions[k], x)? != self.positions[k + 1] {
                return Err(WalkError::Inconsistent(k + 1));
            }
        }
        Ok(())
    }

    /// The walk `X_1^{-1} X_2^{-1} ... X_k^{-1}` built from the same increments.
    pub fn reversed(&self, group: &GroupDescriptor) -> Trajectory {
        let steps: Vec<GroupElement> = self.steps.iter().map(|x| group.inverse(x)).collect();
        let mut positions = Vec::with_capacity(steps.len() + 1);
        let mut cur = group.identity();
        positions.push(cur.clone());
        for x in &steps {
            group.mul_assign(&mut cur, x);
            positions.push(cur.clone());
        }
        Trajectory { steps, positions, stream: self.stream }
    }
}

/// Samples `n` i.i.d. steps from `mu` on the given stream.
pub fn sample_trajectory(mu: &StepDistribution, n: usize, stream: RngStreamSpec) -> Trajectory {
    let mut t = sample_trajectory_with(mu, &StepSampler::new(mu), n, &mut stream.rng());
    t.stream = Some(stream);
    t
}

/// Samples `n` steps drawing from an existing generator.
pub fn sample_trajectory_with<R: RngCore + ?Sized>(
    mu: &StepDistribution,
    sampler: &StepSampler,
    n: usize,
    rng: &mut R,
) -> Trajectory {
    let group = mu.group();
    let mut steps = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n + 1);
    let mut cur = group.identity();
    positions.push(cur.clone());
    for _ in 0..n {
        let x = mu.support()[sampler.sample(rng)].0.clone();
        group.mul_assign(&mut cur, &x);
        steps.push(x);
        positions.push(cur.clone());
    }
    Trajectory { steps, positions, stream: None }
}

/// Visited set of a walk. Nearest-neighbour walks on the integer line keep
/// the interval form; equality and hashing only look at the visited elements.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum RangeSet {
    Interval { min: i64, max: i64 },
    Elements(BTreeSet<GroupElement>),
}

impl PartialEq for RangeSet {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (RangeSet::Interval { min: a, max: b }, RangeSet::Interval { min: c, max: d }) => a == c && b == d,
            (RangeSet::Elements(a), RangeSet::Elements(b)) => a == b,
            _ => self.len() == other.len() && self.elements() == other.elements(),
        }
    }
}

impl Eq for RangeSet {}

impl std::hash::Hash for RangeSet {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            RangeSet::Interval { min, max } => {
                state.write_usize(self.len());
                for v in *min..=*max {
                    GroupElement::Integer(v).hash(state);
                }
            }
            RangeSet::Elements(s) => {
                state.write_usize(s.len());
                for x in s {
                    x.hash(state);
                }
            }
        }
    }
}

impl RangeSet {
    pub fn singleton(group: &GroupDescriptor) -> Self {
        match group {
            GroupDescriptor::IntegerLine => RangeSet::Interval { min: 0, max: 0 },
            _ => RangeSet::Elements(BTreeSet::from([group.identity()])),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RangeSet::Interval { min, max } => (max - min + 1) as usize,
            RangeSet::Elements(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        match (self, x) {
            (RangeSet::Interval { min, max }, GroupElement::Integer(v)) => min <= v && v <= max,
            (RangeSet::Elements(s), _) => s.contains(x),
            _ => false,
        }
    }

    pub fn insert(&mut self, x: GroupElement) {
        match (self, x) {
            (RangeSet::Interval { min, max }, GroupElement::Integer(v)) => {
                debug_assert!(v >= *min - 1 && v <= *max + 1, "interval range grew by a jump");
                *min = (*min).min(v);
                *max = (*max).max(v);
            }
            (RangeSet::Elements(s), x) => {
                s.insert(x);
            }
            _ => unreachable!("range and element kinds differ"),
        }
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        match self {
            RangeSet::Interval { min, max } => (*min..=*max).map(GroupElement::Integer).collect(),
            RangeSet::Elements(s) => s.iter().cloned().collect(),
        }
    }
}

/// Range `R_n` together with the endpoint `S_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RangeState {
    pub visited: RangeSet,
    pub endpoint: GroupElement,
    pub n: usize,
}

impl RangeState {
    pub fn new(group: &GroupDescriptor) -> Self {
        RangeState {
            visited: RangeSet::singleton(group),
            endpoint: group.identity(),
            n: 0,
        }
    }

    /// Advances by one step. On `Z` the interval form is kept only while every
    /// step has modulus at most one; a longer jump switches to the set form.
    pub fn extend(&mut self, group: &GroupDescriptor, step: &GroupElement) {
        group.mul_assign(&mut self.endpoint, step);
        if let (RangeSet::Interval { .. }, GroupElement::Integer(x)) = (&self.visited, step) {
            if x.abs() > 1 {
                self.visited = RangeSet::Elements(self.visited.elements().into_iter().collect());
            }
        }
        self.visited.insert(self.endpoint.clone());
        self.n += 1;
    }
}

/// Incremental range computation.
pub fn range_of(group: &GroupDescriptor, traj: &Trajectory) -> RangeState {
    let mut state = RangeState::new(group);
    for x in &traj.steps {
        state.extend(group, x);
    }
    state
}

/// Range recomputed directly from the list of positions.
pub fn range_from_positions(traj: &Trajectory) -> BTreeSet<GroupElement> {
    traj.positions.iter().cloned().collect()
}

/// Trace digraph `(A, B, C)`: visited vertices, traversed directed edges and
/// the number of traversals of each edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceDigraph {
    pub vertices: BTreeSet<GroupElement>,
    pub edges: BTreeMap<(GroupElement, GroupElement), u64>,
    pub n: usize,
}

impl TraceDigraph {
    pub fn new(group: &GroupDescriptor) -> Self {
        TraceDigraph {
            vertices: BTreeSet::from([group.identity()]),
            edges: BTreeMap::new(),
            n: 0,
        }
    }

    pub fn push_edge(&mut self, from: GroupElement, to: GroupElement) {
        self.vertices.insert(to.clone());
        *self.edges.entry((from, to)).or_insert(0) += 1;
        self.n += 1;
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Breadth-first search from `e` along directed edges must reach every
    /// vertex, and every edge endpoint must be a vertex.
    pub fn check_reachable(&self, group: &GroupDescriptor) -> Result<(), WalkError> {
        let e = group.identity();
        if !self.vertices.contains(&e) {
            return Err(WalkError::Unreachable(e.to_string()));
        }
        let mut out: BTreeMap<&GroupElement, Vec<&GroupElement>> = BTreeMap::new();
        for (x, y) in self.edges.keys() {
            if !self.vertices.contains(x) {
                return Err(WalkError::Unreachable(x.to_string()));
            }
            if !self.vertices.contains(y) {
                return Err(WalkError::Unreachable(y.to_string()));
            }
            out.entry(x).or_default().push(y);
        }
        let mut seen: BTreeSet<&GroupElement> = BTreeSet::from([&e]);
        let mut queue = VecDeque::from([&e]);
        while let Some(v) = queue.pop_front() {
            for &w in out.get(v).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        match self.vertices.iter().find(|v| !seen.contains(v)) {
            Some(v) => Err(WalkError::Unreachable(v.to_string())),
            None => Ok(()),
        }
    }
}

/// Trace digraph of a trajectory.
pub fn trace_of(group: &GroupDescriptor, traj: &Trajectory) -> TraceDigraph {
    let mut g = TraceDigraph::new(group);
    for w in traj.positions.windows(2) {
        g.push_edge(w[0].clone(), w[1].clone());
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::letters_to_word;

    fn z(steps: &[i64]) -> Trajectory {
        Trajectory::from_steps(
            &GroupDescriptor::IntegerLine,
            steps.iter().map(|&s| GroupElement::Integer(s)).collect(),
        )
        .unwrap()
    }

    fn int(x: i64) -> GroupElement {
        GroupElement::Integer(x)
    }

    #[test]
    fn empty_walk() {
        let t = sample_trajectory(
            &StepDistribution::new(GroupDescriptor::IntegerLine, vec![(int(1), 0.5), (int(-1), 0.5)]).unwrap(),
            0,
            RngStreamSpec::new(1, 0),
        );
        assert_eq!(t.positions, vec![int(0)]);
    }

    #[test]
    fn up_down_range_and_trace() {
        let g = GroupDescriptor::IntegerLine;
        let t = z(&[1, -1]);
        let r = range_of(&g, &t);
        assert_eq!(r.visited, RangeSet::Interval { min: 0, max: 1 });
        assert_eq!(r.endpoint, int(0));
        let tr = trace_of(&g, &t);
        assert_eq!(tr.vertices, BTreeSet::from([int(0), int(1)]));
        assert_eq!(tr.edges, BTreeMap::from([((int(0), int(1)), 1), ((int(1), int(0)), 1)]));
    }

    #[test]
    fn up_up_down() {
        let g = GroupDescriptor::IntegerLine;
        let t = z(&[1, 1, -1]);
        let r = range_of(&g, &t);
        assert_eq!(r.visited.len(), 3);
        assert_eq!(r.endpoint, int(1));
        let tr = trace_of(&g, &t);
        assert_eq!(tr.edges[&(int(0), int(1))], 1);
        assert_eq!(tr.edges[&(int(1), int(2))], 1);
        assert_eq!(tr.edges[&(int(2), int(1))], 1);
    }

    #[test]
    fn repeated_edges_accumulate() {
        let g = GroupDescriptor::IntegerLine;
        let tr = trace_of(&g, &z(&[1, -1, 1, -1]));
        assert_eq!(tr.edges[&(int(0), int(1))], 2);
        assert_eq!(tr.edges[&(int(1), int(0))], 2);
        assert_eq!(tr.total_weight(), 4);
        tr.check_reachable(&g).unwrap();
    }

    #[test]
    fn reversal_examples() {
        let g = GroupDescriptor::IntegerLine;
        let rev = z(&[1, 2]).reversed(&g);
        assert_eq!(rev.steps, vec![int(-1), int(-2)]);
        assert_eq!(rev.positions, vec![int(0), int(-1), int(-3)]);

        let f2 = GroupDescriptor::FreeGroup { rank: 2 };
        let w = |s: &str| GroupElement::Word(letters_to_word(s).unwrap());
        let t = Trajectory::from_steps(&f2, vec![w("a"), w("b")]).unwrap();
        let rev = t.reversed(&f2);
        assert_eq!(rev.steps, vec![w("A"), w("B")]);
        assert_eq!(rev.endpoint(), &w("AB"));
    }

    #[test]
    fn long_jumps_leave_interval_form() {
        let g = GroupDescriptor::IntegerLine;
        let t = z(&[2, -1]);
        let r = range_of(&g, &t);
        assert_eq!(r.visited.len(), 3);
        assert!(!r.visited.contains(&int(-1)));
        let t = z(&[2, 2]);
        assert_eq!(range_of(&g, &t).visited.elements(), vec![int(0), int(2), int(4)]);
    }

    #[test]
    fn unreachable_vertex_is_reported() {
        let g = GroupDescriptor::IntegerLine;
        let mut tr = TraceDigraph::new(&g);
        tr.vertices.insert(int(5));
        assert!(matches!(tr.check_reachable(&g), Err(WalkError::Unreachable(_))));
    }
}
