// Copyright contributors to the telesabre project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Heuristic energy of a layout.
//!
//! A gate whose qubits share a core costs its hop distance. A gate spanning
//! cores costs the length of the shortest path on a *contracted graph* whose
//! nodes are the two gate qubits and every communication qubit:
//!
//! 1. comm-comm edges inside a core weigh their hop distance;
//! 2. gate-qubit to comm edges weigh `|D - 1|`, zero when the gate qubit is
//!    coupled to (and not on) the comm qubit;
//! 3. link edges weigh `teleport_base_weight`;
//! 4. every edge incident to a comm qubit pays half the hops to that comm's
//!    nearest free qubit;
//! 5. every edge incident to a comm qubit of a core with fewer than two free
//!    qubits pays `capacity_penalty`, unless that core holds one of the gate
//!    qubits: leaving a full core is fine and entering the target core can
//!    end in a telegate, so only transit through full cores is penalized.
//!
//! The layout energy is the mean front-layer gate energy plus `k` times the
//! mean extended-set gate energy.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::architecture::Architecture;
use crate::circuit::{Gate, GateId};
use crate::layout::Layout;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("gate {0} has both qubits in the same core")]
    SameCore(GateId),
    #[error("no inter-core route for gate {0}")]
    Unroutable(GateId),
}

/// Tunables of the router and its energy function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterParams {
    /// Weight `k` of the extended-set term.
    pub lookahead_k: f64,
    /// Maximum number of gates in the extended set.
    pub extended_size: usize,
    /// Usage increment per committed operation.
    pub decay_delta: f64,
    /// Penalty for edges into cores with fewer than two free qubits;
    /// defaults to the number of physical qubits.
    pub capacity_penalty: Option<f64>,
    /// Extra weight per earlier use of a link within one scoring round.
    pub traffic_coeff: f64,
    /// Base weight of an inter-core link edge.
    pub teleport_base_weight: f64,
    /// Movement operations allowed between gate executions; defaults to
    /// ten times the number of physical qubits.
    pub max_stall: Option<usize>,
    /// Stalled operations after which the router stops scoring and moves
    /// the cheapest front gate's qubits together greedily. `None` disables.
    pub release_valve: Option<usize>,
    pub seed: u64,
}

pub const DEFAULT_RELEASE_VALVE: usize = 20;

impl Default for RouterParams {
    fn default() -> Self {
        Self {
            lookahead_k: 0.5,
            extended_size: 20,
            decay_delta: 0.001,
            capacity_penalty: None,
            traffic_coeff: 0.5,
            teleport_base_weight: 1.0,
            max_stall: None,
            release_valve: Some(DEFAULT_RELEASE_VALVE),
            seed: 0,
        }
    }
}

impl RouterParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn capacity_penalty_for(&self, arch: &Architecture) -> f64 {
        self.capacity_penalty.unwrap_or(arch.num_qubits() as f64)
    }

    pub fn max_stall_for(&self, arch: &Architecture) -> usize {
        self.max_stall.unwrap_or(10 * arch.num_qubits())
    }

    /// Energy assigned to an extended-set gate that cannot be routed.
    pub fn unroutable_sentinel(&self, arch: &Architecture) -> f64 {
        10.0 * arch.num_qubits() as f64
    }

    pub fn validate(&self) -> Result<(), String> {
        let weights = [
            ("lookahead_k", self.lookahead_k),
            ("decay_delta", self.decay_delta),
            ("traffic_coeff", self.traffic_coeff),
            ("teleport_base_weight", self.teleport_base_weight),
            ("capacity_penalty", self.capacity_penalty.unwrap_or(0.0)),
        ];
        for (name, w) in weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(format!("{name} must be a finite non-negative number"));
            }
        }
        if self.max_stall == Some(0) {
            return Err("max_stall must be at least 1".into());
        }
        if self.release_valve == Some(0) {
            return Err("release_valve must be at least 1".into());
        }
        Ok(())
    }
}

/// Node index of the gate's first qubit in a [`ContractedGraph`].
pub const SOURCE: usize = 0;
/// Node index of the gate's second qubit.
pub const TARGET: usize = 1;

/// Layout-dependent quantities shared by every contracted graph built for
/// one layout: comm freeing costs and which cores are short of capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingContext {
    freeing: Vec<f64>,
    full: Vec<bool>,
}

impl RoutingContext {
    pub fn new(layout: &Layout, arch: &Architecture) -> Self {
        let free: Vec<Vec<usize>> = (0..arch.num_cores())
            .map(|c| {
                arch.core_qubits(c)
                    .iter()
                    .copied()
                    .filter(|&q| layout.is_free(q))
                    .collect()
            })
            .collect();
        let freeing = arch
            .comm_qubits()
            .iter()
            .map(|&c| {
                free[arch.core_of(c)]
                    .iter()
                    .map(|&f| arch.hops(c, f))
                    .min()
                    .map_or(f64::INFINITY, |d| d as f64 / 2.0)
            })
            .collect();
        let full = free.iter().map(|f| f.len() < 2).collect();
        Self { freeing, full }
    }

    pub fn is_full(&self, core: usize) -> bool {
        self.full[core]
    }
}

/// Routing graph for one cross-core gate. Node 0 and 1 are the gate's
/// qubits, node `2 + i` is the i-th communication qubit of the architecture.
#[derive(Debug, Clone)]
pub struct ContractedGraph {
    qubits: Vec<usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

/// Multiset of link uses accumulated while routing one front layer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Traffic {
    uses: BTreeMap<(usize, usize), u32>,
}

impl Traffic {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, a: usize, b: usize) {
        *self.uses.entry((a.min(b), a.max(b))).or_default() += 1;
    }

    pub fn uses(&self, a: usize, b: usize) -> u32 {
        self.uses.get(&(a.min(b), a.max(b))).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.uses.is_empty()
    }
}

fn comm_index(arch: &Architecture, qubit: usize) -> usize {
    arch.comm_index(qubit).expect("communication qubit")
}

/// Adjacency access shared by the explicit and the on-the-fly graph.
pub trait RoutingGraph {
    fn node_count(&self) -> usize;
    /// Physical qubit behind a node.
    fn qubit(&self, node: usize) -> usize;
    fn for_each_neighbor(&self, node: usize, f: impl FnMut(usize, f64));
}

/// Contracted graph of one gate with weights computed on demand from a
/// [`RoutingContext`], so routing needs no per-gate adjacency.
#[derive(Debug, Clone, Copy)]
pub struct GateGraph<'a> {
    ctx: &'a RoutingContext,
    arch: &'a Architecture,
    params: &'a RouterParams,
    traffic: &'a Traffic,
    ends: [usize; 2],
    end_cores: [usize; 2],
    penalty: f64,
}

impl<'a> GateGraph<'a> {
    pub fn new(
        ctx: &'a RoutingContext,
        layout: &Layout,
        arch: &'a Architecture,
        gate: &Gate,
        params: &'a RouterParams,
        traffic: &'a Traffic,
    ) -> Result<Self, EnergyError> {
        let ends = [layout.phys(gate.qubits[0]), layout.phys(gate.qubits[1])];
        let end_cores = [arch.core_of(ends[0]), arch.core_of(ends[1])];
        if end_cores[0] == end_cores[1] {
            return Err(EnergyError::SameCore(gate.id));
        }
        Ok(Self {
            ctx,
            arch,
            params,
            traffic,
            ends,
            end_cores,
            penalty: params.capacity_penalty_for(arch),
        })
    }

    fn resolve(&self, node: usize) -> usize {
        match node {
            SOURCE | TARGET => self.ends[node],
            _ => self.arch.comm_qubits()[node - 2],
        }
    }

    fn cap(&self, core: usize) -> f64 {
        if self.ctx.full[core] && !self.end_cores.contains(&core) {
            self.penalty
        } else {
            0.0
        }
    }

    /// Rule (2) plus (4) and (5) at the comm end.
    fn end_weight(&self, end: usize, i: usize) -> f64 {
        let c = self.arch.comm_qubits()[i];
        (self.arch.hops(self.ends[end], c) as f64 - 1.0).abs()
            + self.ctx.freeing[i]
            + self.cap(self.end_cores[end])
    }
}

impl RoutingGraph for GateGraph<'_> {
    fn node_count(&self) -> usize {
        self.arch.comm_qubits().len() + 2
    }

    fn qubit(&self, node: usize) -> usize {
        self.resolve(node)
    }

    fn for_each_neighbor(&self, node: usize, mut f: impl FnMut(usize, f64)) {
        let arch = self.arch;
        if node < 2 {
            for &c in arch.core_comm_qubits(self.end_cores[node]) {
                let i = comm_index(arch, c);
                f(i + 2, self.end_weight(node, i));
            }
            return;
        }
        let i = node - 2;
        let comms = arch.comm_qubits();
        let c = comms[i];
        let core = arch.core_of(c);
        // Rules (1), (3), (4) come precomputed; (5) and link traffic depend
        // on the gate and the routing round.
        let freeing = &self.ctx.freeing;
        for &(j, hops, is_link) in arch.comm_adjacency(i) {
            let raw = hops as f64 + freeing[i] + freeing[j];
            let w = if is_link {
                let d = comms[j];
                self.params.teleport_base_weight
                    + self.params.traffic_coeff * self.traffic.uses(c, d) as f64
                    + raw
                    + self.cap(core)
                    + self.cap(arch.core_of(d))
            } else {
                raw + self.cap(core)
            };
            f(j + 2, w);
        }
        for end in 0..2 {
            if core == self.end_cores[end] {
                f(end, self.end_weight(end, i));
            }
        }
    }
}

impl RoutingGraph for ContractedGraph {
    fn node_count(&self) -> usize {
        self.qubits.len()
    }

    fn qubit(&self, node: usize) -> usize {
        self.qubits[node]
    }

    fn for_each_neighbor(&self, node: usize, mut f: impl FnMut(usize, f64)) {
        for &(v, w) in &self.adjacency[node] {
            f(v, w);
        }
    }
}

impl ContractedGraph {
    pub fn build(
        ctx: &RoutingContext,
        layout: &Layout,
        arch: &Architecture,
        gate: &Gate,
        params: &RouterParams,
        traffic: &Traffic,
    ) -> Result<Self, EnergyError> {
        Ok(Self::materialize(&GateGraph::new(
            ctx, layout, arch, gate, params, traffic,
        )?))
    }

    fn materialize(graph: &GateGraph<'_>) -> Self {
        let n = graph.node_count();
        let qubits = (0..n).map(|u| graph.resolve(u)).collect();
        let adjacency = (0..n)
            .map(|u| {
                let mut out = Vec::new();
                graph.for_each_neighbor(u, |v, w| out.push((v, w)));
                out
            })
            .collect();
        Self { qubits, adjacency }
    }

    pub fn node_count(&self) -> usize {
        self.qubits.len()
    }

    /// Physical qubit behind a node.
    pub fn qubit(&self, node: usize) -> usize {
        self.qubits[node]
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.adjacency[u]
            .iter()
            .find(|&&(x, _)| x == v)
            .map(|&(_, w)| w)
    }

    /// Every undirected edge `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| {
                ns.iter()
                    .filter(move |&&(v, _)| u < v)
                    .map(move |&(v, w)| (u, v, w))
            })
            .collect()
    }

    /// Builds a graph directly from weighted edges (used by tests and tools).
    pub fn from_edges(qubits: Vec<usize>, edges: &[(usize, usize, f64)]) -> Self {
        let mut adjacency = vec![Vec::new(); qubits.len()];
        for &(u, v, w) in edges {
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        Self { qubits, adjacency }
    }
}

/// Shortest path on a contracted graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub length: f64,
    /// Node indices from source to destination.
    pub path: Vec<usize>,
}

impl Route {
    /// Consecutive node pairs of the path whose qubits lie in different cores,
    /// as physical qubits in path direction.
    pub fn links(&self, graph: &impl RoutingGraph, arch: &Architecture) -> Vec<(usize, usize)> {
        self.path
            .windows(2)
            .filter(|w| w[0] >= 2 && w[1] >= 2)
            .map(|w| (graph.qubit(w[0]), graph.qubit(w[1])))
            .filter(|&(a, b)| arch.core_of(a) != arch.core_of(b))
            .collect()
    }
}

#[derive(Debug, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    /// Reversed so that `BinaryHeap` pops the smallest distance.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source Dijkstra; stops once `stop` is settled. Unreached nodes
/// stay at infinity.
fn dijkstra(graph: &impl RoutingGraph, src: usize, stop: Option<usize>) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.node_count()];
    let mut settled = vec![false; graph.node_count()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        node: src,
    });
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        if Some(u) == stop {
            break;
        }
        graph.for_each_neighbor(u, |v, w| {
            let nd = d + w;
            if !settled[v] && nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry { dist: nd, node: v });
            }
        });
    }
    dist
}

fn tight(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Shortest-path length from `src` to `dst`, `None` when unreachable.
pub fn route_length(graph: &impl RoutingGraph, src: usize, dst: usize) -> Option<f64> {
    let d = dijkstra(graph, src, Some(dst))[dst];
    d.is_finite().then_some(d)
}

/// Dijkstra from `src` to `dst`. Among equal-length paths the
/// lexicographically smallest node sequence wins. `None` when unreachable.
pub fn route(graph: &impl RoutingGraph, src: usize, dst: usize) -> Option<Route> {
    // Distances to `dst` (edges are symmetric), then walk from `src` always
    // taking the smallest next node that stays on a shortest path.
    let to_dst = dijkstra(graph, dst, None);
    let length = to_dst[src];
    if !length.is_finite() {
        return None;
    }
    // Zero-weight edges at the gate qubits can make tight edges form cycles,
    // so the walk backtracks out of dead ends.
    fn walk(
        graph: &impl RoutingGraph,
        to_dst: &[f64],
        dst: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
    ) -> bool {
        let u = *path.last().expect("non-empty path");
        if u == dst {
            return true;
        }
        let mut next = Vec::new();
        graph.for_each_neighbor(u, |v, w| {
            if !on_path[v] && tight(to_dst[u], w + to_dst[v]) {
                next.push(v);
            }
        });
        next.sort_unstable();
        for v in next {
            on_path[v] = true;
            path.push(v);
            if walk(graph, to_dst, dst, path, on_path) {
                return true;
            }
            path.pop();
            on_path[v] = false;
        }
        false
    }
    let mut path = vec![src];
    let mut on_path = vec![false; graph.node_count()];
    on_path[src] = true;
    if !walk(graph, &to_dst, dst, &mut path, &mut on_path) {
        return None;
    }
    Some(Route { length, path })
}

/// Contracted graph for `gate` under `layout`, with no link traffic.
pub fn build_contracted_graph(
    layout: &Layout,
    arch: &Architecture,
    gate: &Gate,
    params: &RouterParams,
) -> Result<ContractedGraph, EnergyError> {
    let ctx = RoutingContext::new(layout, arch);
    ContractedGraph::build(&ctx, layout, arch, gate, params, &Traffic::new())
}

/// Routes a cross-core gate; returns the graph with the route.
pub fn route_gate(
    ctx: &RoutingContext,
    layout: &Layout,
    arch: &Architecture,
    gate: &Gate,
    params: &RouterParams,
    traffic: &Traffic,
) -> Result<(ContractedGraph, Route), EnergyError> {
    let graph = ContractedGraph::build(ctx, layout, arch, gate, params, traffic)?;
    let r = route(&graph, SOURCE, TARGET).ok_or(EnergyError::Unroutable(gate.id))?;
    Ok((graph, r))
}

/// Local hop distance for same-core gates, routing length otherwise. Links on
/// the chosen route are recorded into `traffic`.
pub fn gate_energy_in(
    ctx: &RoutingContext,
    layout: &Layout,
    arch: &Architecture,
    gate: &Gate,
    params: &RouterParams,
    traffic: &mut Traffic,
) -> Result<f64, EnergyError> {
    let (a, b) = (layout.phys(gate.qubits[0]), layout.phys(gate.qubits[1]));
    if let Some(d) = arch.distances().get(a, b) {
        return Ok(d as f64);
    }
    let graph = GateGraph::new(ctx, layout, arch, gate, params, traffic)?;
    let r = route(&graph, SOURCE, TARGET).ok_or(EnergyError::Unroutable(gate.id))?;
    let links = r.links(&graph, arch);
    for (x, y) in links {
        traffic.record(x, y);
    }
    Ok(r.length)
}

/// Like [`gate_energy_in`] but leaves `traffic` untouched.
pub fn gate_length_in(
    ctx: &RoutingContext,
    layout: &Layout,
    arch: &Architecture,
    gate: &Gate,
    params: &RouterParams,
    traffic: &Traffic,
) -> Result<f64, EnergyError> {
    let (a, b) = (layout.phys(gate.qubits[0]), layout.phys(gate.qubits[1]));
    if let Some(d) = arch.distances().get(a, b) {
        return Ok(d as f64);
    }
    let graph = GateGraph::new(ctx, layout, arch, gate, params, traffic)?;
    route_length(&graph, SOURCE, TARGET).ok_or(EnergyError::Unroutable(gate.id))
}

/// Energy of a single gate with no link traffic.
pub fn gate_energy(
    layout: &Layout,
    arch: &Architecture,
    gate: &Gate,
    params: &RouterParams,
) -> Result<f64, EnergyError> {
    let ctx = RoutingContext::new(layout, arch);
    gate_energy_in(&ctx, layout, arch, gate, params, &mut Traffic::new())
}

/// Mean front energy plus `k` times mean extended-set energy. Front gates are
/// routed in the given order, each seeing the link traffic of earlier ones.
/// An empty front contributes zero.
pub fn total_energy(
    layout: &Layout,
    arch: &Architecture,
    front: &[&Gate],
    extended: &[&Gate],
    params: &RouterParams,
) -> Result<f64, EnergyError> {
    let ctx = RoutingContext::new(layout, arch);
    total_energy_in(&ctx, layout, arch, front, extended, params)
}

pub fn total_energy_in(
    ctx: &RoutingContext,
    layout: &Layout,
    arch: &Architecture,
    front: &[&Gate],
    extended: &[&Gate],
    params: &RouterParams,
) -> Result<f64, EnergyError> {
    total_energy_normalized(ctx, layout, arch, front, front.len(), extended, params)
}

/// Like [`total_energy_in`] but divides the front sum by `front_norm`
/// instead of `front.len()`. Scoring a telegate uses the front size before
/// the gate executes, so the executed gate counts as zero energy.
pub fn total_energy_normalized(
    ctx: &RoutingContext,
    layout: &Layout,
    arch: &Architecture,
    front: &[&Gate],
    front_norm: usize,
    extended: &[&Gate],
    params: &RouterParams,
) -> Result<f64, EnergyError> {
    let mut traffic = Traffic::new();
    let mut front_sum = 0.0;
    for g in front {
        front_sum += gate_energy_in(ctx, layout, arch, g, params, &mut traffic)?;
    }
    let mut energy = if front_norm == 0 {
        0.0
    } else {
        front_sum / front_norm as f64
    };
    if !extended.is_empty() {
        let sentinel = params.unroutable_sentinel(arch);
        let mut ext_sum = 0.0;
        for g in extended {
            ext_sum += gate_length_in(ctx, layout, arch, g, params, &traffic).unwrap_or(sentinel);
        }
        energy += params.lookahead_k * ext_sum / extended.len() as f64;
    }
    Ok(energy)
}

/// Per-gate energies of one layout, reused when scoring nearby layouts.
/// A gate's value is reused when its qubits did not move, the routing
/// context is unchanged and the link traffic it sees is the same.
#[derive(Debug, Clone)]
pub struct EnergyCache {
    layout: Layout,
    ctx: RoutingContext,
    front: Vec<(GateId, Result<f64, EnergyError>)>,
    /// Traffic seen by each front gate, plus the final traffic.
    traffic: Vec<Traffic>,
    extended: Vec<Result<f64, EnergyError>>,
}

impl EnergyCache {
    pub fn new(
        layout: &Layout,
        arch: &Architecture,
        front: &[&Gate],
        extended: &[&Gate],
        params: &RouterParams,
    ) -> Self {
        let ctx = RoutingContext::new(layout, arch);
        let mut traffic = Traffic::new();
        let mut seen = Vec::with_capacity(front.len() + 1);
        let mut values = Vec::with_capacity(front.len());
        for g in front {
            seen.push(traffic.clone());
            values.push((
                g.id,
                gate_energy_in(&ctx, layout, arch, g, params, &mut traffic),
            ));
        }
        let extended = extended
            .iter()
            .map(|g| gate_length_in(&ctx, layout, arch, g, params, &traffic))
            .collect();
        seen.push(traffic);
        Self {
            layout: layout.clone(),
            ctx,
            front: values,
            traffic: seen,
            extended,
        }
    }

    fn unmoved(&self, layout: &Layout, gate: &Gate) -> bool {
        gate.qubits
            .iter()
            .all(|&q| self.layout.phys(q) == layout.phys(q))
    }

    /// Same value as [`total_energy_normalized`]. `front` must be a
    /// subsequence of the cached front and `extended` the cached extended set.
    #[allow(clippy::too_many_arguments)]
    pub fn total_energy(
        &self,
        ctx: &RoutingContext,
        layout: &Layout,
        arch: &Architecture,
        front: &[&Gate],
        front_norm: usize,
        extended: &[&Gate],
        params: &RouterParams,
    ) -> Result<f64, EnergyError> {
        debug_assert_eq!(extended.len(), self.extended.len());
        let same_ctx = *ctx == self.ctx;
        let mut traffic = Traffic::new();
        let mut front_sum = 0.0;
        let mut k = 0;
        for g in front {
            while self.front[k].0 != g.id {
                k += 1;
            }
            if same_ctx && self.unmoved(layout, g) && traffic == self.traffic[k] {
                front_sum += self.front[k].1.clone()?;
                traffic.clone_from(&self.traffic[k + 1]);
            } else {
                front_sum += gate_energy_in(ctx, layout, arch, g, params, &mut traffic)?;
            }
        }
        let mut energy = if front_norm == 0 {
            0.0
        } else {
            front_sum / front_norm as f64
        };
        if !extended.is_empty() {
            let reuse = same_ctx && traffic == self.traffic[self.front.len()];
            let sentinel = params.unroutable_sentinel(arch);
            let mut ext_sum = 0.0;
            for (g, cached) in extended.iter().zip(&self.extended) {
                let value = if reuse && self.unmoved(layout, g) {
                    cached.clone()
                } else {
                    gate_length_in(ctx, layout, arch, g, params, &traffic)
                };
                ext_sum += value.unwrap_or(sentinel);
            }
            energy += params.lookahead_k * ext_sum / extended.len() as f64;
        }
        Ok(energy)
    }
}
