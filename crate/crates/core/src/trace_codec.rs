//! Width-first canonical encoding of trace digraphs.
//!
//! A trace digraph `(A, B, C)` is visited starting from `v_0 = e`. Every
//! frontier entry carries an address `(i_1, ..., i_l)` of enumeration indices,
//! naming the vertex `g_{i_1} ... g_{i_l}`. At each step the frontier entry with
//! the smallest address (shorter first, then lexicographic) is visited; its
//! out-edges `(v_h, v_h g_i)` produce the neighbour set `N_h` and the weights
//! `O^{i,h}`, and frontier entries naming visited vertices are dropped.
//!
//! The map `(A, B, C) -> {O^{i,h}}` is injective, so codes serve as keys for
//! counting digraph outcomes.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::RngCore;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{GroupElement, GroupEnumeration, GroupError, StepDistribution};
use crate::stream::RngStreamSpec;
use crate::walk::{sample_trajectory_with, trace_of, StepSampler, TraceDigraph};

/// Version byte leading every canonical key.
pub const KEY_VERSION: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("vertex {0} cannot be reached from the identity along directed edges")]
    Unreachable(String),
    #[error("edge ({0}, {1}) leaves the vertex set")]
    DanglingEdge(String, String),
    #[error("malformed trace code: {0}")]
    Malformed(String),
}

/// Frontier address ordered by length first, then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexAddress(pub Vec<u64>);

impl Ord for VertexAddress {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for VertexAddress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl VertexAddress {
    fn child(&self, i: u64) -> VertexAddress {
        let mut v = self.0.clone();
        v.push(i);
        VertexAddress(v)
    }
}

/// Neighbour sets `N_h` (one per visited vertex) and the positive weights
/// `O^{i,h}` keyed by `(i, h)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceCode {
    pub neighbors: Vec<BTreeSet<u64>>,
    pub weights: BTreeMap<(u64, u64), u64>,
}

impl TraceCode {
    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }

    /// `O^{i,h}`, zero when absent.
    pub fn weight(&self, i: u64, h: u64) -> u64 {
        self.weights.get(&(i, h)).copied().unwrap_or(0)
    }

    /// `O^i = sum_h O^{i,h}`: number of steps equal to `g_i`.
    pub fn step_count(&self, i: u64) -> u64 {
        self.weights
            .iter()
            .filter(|((j, _), _)| *j == i)
            .map(|(_, w)| w)
            .sum()
    }

    /// Checks `N_h = { i : O^{i,h} > 0 }` for `h < |A|` and no weights beyond.
    pub fn check_consistent(&self) -> Result<(), CodecError> {
        if self.neighbors.is_empty() {
            return Err(CodecError::Malformed("no vertices".into()));
        }
        for (&(i, h), &w) in &self.weights {
            if w == 0 {
                return Err(CodecError::Malformed(format!("zero weight stored at ({i}, {h})")));
            }
            let listed = self
                .neighbors
                .get(h as usize)
                .is_some_and(|n| n.contains(&i));
            if !listed {
                return Err(CodecError::Malformed(format!("O^({i},{h}) > 0 but {i} not in N_{h}")));
            }
        }
        for (h, set) in self.neighbors.iter().enumerate() {
            if let Some(i) = set.iter().find(|&&i| self.weight(i, h as u64) == 0) {
                return Err(CodecError::Malformed(format!("{i} in N_{h} but O^({i},{h}) = 0")));
            }
        }
        Ok(())
    }
}

struct Frontier {
    entries: BTreeMap<VertexAddress, GroupElement>,
}

impl Frontier {
    fn new() -> Self {
        Frontier { entries: BTreeMap::new() }
    }

    fn pop_min(&mut self) -> Option<(VertexAddress, GroupElement)> {
        self.entries.pop_first()
    }

    fn purge(&mut self, visited: &GroupElement) {
        self.entries.retain(|_, v| v != visited);
    }
}

/// Encodes a trace digraph generated by a walk.
pub fn encode(graph: &TraceDigraph, enumeration: &GroupEnumeration) -> Result<TraceCode, CodecError> {
    let group = enumeration.group();
    let mut out_edges: BTreeMap<&GroupElement, Vec<(u64, &GroupElement, u64)>> = BTreeMap::new();
    for ((x, y), &w) in &graph.edges {
        if !graph.vertices.contains(x) || !graph.vertices.contains(y) {
            return Err(CodecError::DanglingEdge(x.to_string(), y.to_string()));
        }
        let step = group.mul(&group.inverse(x), y)?;
        let i = enumeration.index_of(&step)?;
        out_edges.entry(x).or_default().push((i, y, w));
    }

    let mut code = TraceCode::default();
    let mut visited: HashSet<GroupElement> = HashSet::new();
    let mut frontier = Frontier::new();
    let mut current = (VertexAddress(Vec::new()), group.identity());
    if !graph.vertices.contains(&current.1) {
        return Err(CodecError::Unreachable(current.1.to_string()));
    }
    loop {
        let (address, vertex) = current;
        let h = code.neighbors.len() as u64;
        visited.insert(vertex.clone());
        frontier.purge(&vertex);
        let mut n_h = BTreeSet::new();
        for &(i, y, w) in out_edges.get(&vertex).map(Vec::as_slice).unwrap_or(&[]) {
            n_h.insert(i);
            code.weights.insert((i, h), w);
            if !visited.contains(y) {
                frontier.entries.insert(address.child(i), y.clone());
            }
        }
        code.neighbors.push(n_h);
        match frontier.pop_min() {
            Some(next) => current = next,
            None => break,
        }
    }
    if visited.len() != graph.vertices.len() {
        let missing = graph.vertices.iter().find(|v| !visited.contains(*v)).unwrap();
        return Err(CodecError::Unreachable(missing.to_string()));
    }
    Ok(code)
}

/// Rebuilds the digraph from its code.
pub fn decode(code: &TraceCode, enumeration: &GroupEnumeration) -> Result<TraceDigraph, CodecError> {
    code.check_consistent()?;
    let group = enumeration.group();
    let mut graph = TraceDigraph::new(group);
    let mut visited: HashSet<GroupElement> = HashSet::new();
    let mut frontier = Frontier::new();
    let mut current = (VertexAddress(Vec::new()), group.identity());
    for (h, n_h) in code.neighbors.iter().enumerate() {
        let (address, vertex) = current.clone();
        visited.insert(vertex.clone());
        graph.vertices.insert(vertex.clone());
        frontier.purge(&vertex);
        for &i in n_h {
            let target = group.mul(&vertex, &enumeration.element(i)?)?;
            let w = code.weight(i, h as u64);
            graph.edges.insert((vertex.clone(), target.clone()), w);
            graph.n += w as usize;
            if !visited.contains(&target) {
                frontier.entries.insert(address.child(i), target);
            }
        }
        if h + 1 < code.neighbors.len() {
            current = frontier.pop_min().ok_or_else(|| {
                CodecError::Malformed(format!("frontier exhausted after {} of {} vertices", h + 1, code.neighbors.len()))
            })?;
        }
    }
    if !frontier.entries.is_empty() {
        return Err(CodecError::Malformed(format!(
            "{} frontier entries left after the last vertex",
            frontier.entries.len()
        )));
    }
    Ok(graph)
}

/// Fixed-width big-endian serialization of a code:
/// `version`, `|A|`, then `(h, |N_h|, N_h...)` for every `h`, then the number
/// of weight triples followed by the `(i, h, O^{i,h})` triples in ascending
/// `(i, h)` order.
pub fn code_bytes(code: &TraceCode) -> Vec<u8> {
    let mut out = Vec::with_capacity(1 + 8 * (2 + 2 * code.neighbors.len() + 3 * code.weights.len()));
    out.push(KEY_VERSION);
    out.extend_from_slice(&(code.neighbors.len() as u64).to_be_bytes());
    for (h, n_h) in code.neighbors.iter().enumerate() {
        out.extend_from_slice(&(h as u64).to_be_bytes());
        out.extend_from_slice(&(n_h.len() as u64).to_be_bytes());
        for i in n_h {
            out.extend_from_slice(&i.to_be_bytes());
        }
    }
    out.extend_from_slice(&(code.weights.len() as u64).to_be_bytes());
    for (&(i, h), &w) in &code.weights {
        for v in [i, h, w] {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

/// Canonical byte key of a trace digraph.
pub fn canonical_key(graph: &TraceDigraph, enumeration: &GroupEnumeration) -> Result<Vec<u8>, CodecError> {
    Ok(code_bytes(&encode(graph, enumeration)?))
}

/// Canonical key of `(digraph, endpoint)`: the digraph key followed by the
/// endpoint's enumeration index.
pub fn canonical_key_with_endpoint(
    graph: &TraceDigraph,
    endpoint: &GroupElement,
    enumeration: &GroupEnumeration,
) -> Result<Vec<u8>, CodecError> {
    let mut key = canonical_key(graph, enumeration)?;
    key.extend_from_slice(&enumeration.index_of(endpoint)?.to_be_bytes());
    Ok(key)
}

/// Outcome of [`fuzz`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub cases: usize,
    pub max_n: usize,
    pub seed: u64,
    pub round_trip_failures: usize,
    /// Codes whose neighbour-set count differs from `|A|`.
    pub visit_failures: usize,
    /// Distinct digraphs sharing a key with another digraph.
    pub key_collisions: usize,
    pub distinct_digraphs: usize,
    pub distinct_keys: usize,
    pub errors: Vec<String>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.round_trip_failures == 0
            && self.visit_failures == 0
            && self.key_collisions == 0
            && self.distinct_digraphs == self.distinct_keys
            && self.errors.is_empty()
    }
}

/// Encodes the traces of `cases` sampled trajectories (lengths uniform on
/// `0..=max_n`, trajectory `i` on stream `i` of `seed`) and checks round
/// trips, visit counts and key injectivity.
pub fn fuzz(mu: &StepDistribution, cases: usize, max_n: usize, seed: u64) -> FuzzReport {
    let group = mu.group();
    let enumeration = group.enumeration();
    let sampler = StepSampler::new(mu);
    let mut report = FuzzReport { cases, max_n, seed, ..Default::default() };
    let mut by_key: HashMap<Vec<u8>, (BTreeSet<GroupElement>, BTreeMap<(GroupElement, GroupElement), u64>)> =
        HashMap::new();
    let mut digraphs = HashSet::new();
    let mut collided = HashSet::new();
    for i in 0..cases {
        let mut rng = RngStreamSpec::new(seed, i as u64).rng();
        let n = (rng.next_u64() % (max_n as u64 + 1)) as usize;
        let traj = sample_trajectory_with(mu, &sampler, n, &mut rng);
        let graph = trace_of(group, &traj);
        let code = match encode(&graph, &enumeration) {
            Ok(c) => c,
            Err(e) => {
                report.errors.push(format!("case {i}: {e}"));
                continue;
            }
        };
        if code.neighbors.len() != graph.vertices.len() {
            report.visit_failures += 1;
        }
        match decode(&code, &enumeration) {
            Ok(back) if back == graph => {}
            Ok(_) => report.round_trip_failures += 1,
            Err(e) => report.errors.push(format!("case {i}: {e}")),
        }
        let structural = (graph.vertices.clone(), graph.edges.clone());
        let key = code_bytes(&code);
        match by_key.get(&key) {
            Some(prev) if *prev != structural => {
                collided.insert(structural.clone());
                collided.insert(prev.clone());
            }
            Some(_) => {}
            None => {
                by_key.insert(key, structural.clone());
            }
        }
        digraphs.insert(structural);
    }
    report.key_collisions = collided.len();
    report.distinct_digraphs = digraphs.len();
    report.distinct_keys = by_key.len();
    report
}
