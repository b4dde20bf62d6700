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

//! SABRE-style search with swaps, teledata and telegates.
//!
//! Each iteration executes every front gate that the current layout allows.
//! When none can run, a small candidate set of movement operations is
//! scored by the energy of the layout it produces (scaled by the decay of
//! the qubits it touches) and one of the minimal candidates is committed.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::architecture::Architecture;
use crate::baseline::{plan_budget, plan_gate};
use crate::circuit::{CircuitDag, Gate, GateId};
use crate::energy::{gate_energy, route_gate, EnergyCache, RouterParams, RoutingContext, Traffic};
use crate::initial::initial_layout;
use crate::layout::{
    is_gate_executable, nearest_free, telegate_op, teleport_feasible, CandidateOp, Layout,
    LayoutError,
};
use crate::schedule::{Schedule, ScheduleBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeadlockReason {
    /// `max_stall` movement operations without executing a gate.
    StallLimit,
    /// No candidate operation exists.
    NoCandidates,
    /// Every candidate leaves some front gate without an inter-core route.
    Unroutable,
}

/// Diagnostic state captured when routing cannot make progress.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deadlock {
    pub reason: DeadlockReason,
    /// Front gates with their logical qubits.
    pub blocked_gates: Vec<(GateId, [usize; 2])>,
    /// Cores with fewer than two free physical qubits.
    pub full_cores: Vec<usize>,
    pub stalled_ops: usize,
    pub executed_gates: usize,
    pub layout: Vec<usize>,
}

impl fmt::Display for Deadlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reason = match self.reason {
            DeadlockReason::StallLimit => "stall limit reached",
            DeadlockReason::NoCandidates => "no candidate operation",
            DeadlockReason::Unroutable => "no feasible inter-core route",
        };
        write!(
            f,
            "deadlock ({reason}) after {} gates and {} stalled ops; blocked gates {:?}; full cores {:?}",
            self.executed_gates, self.stalled_ops, self.blocked_gates, self.full_cores
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RouteError {
    #[error("{0}")]
    Deadlock(Box<Deadlock>),
    #[error("infeasible instance: {0}")]
    Infeasible(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

/// Outcome of a routing run.
#[derive(Debug, Clone)]
pub struct RoutingResult {
    pub schedule: Schedule,
    pub layout: Layout,
}

pub(crate) fn check_instance(
    dag: &CircuitDag,
    arch: &Architecture,
    layout: Option<&Layout>,
) -> Result<(), RouteError> {
    let capacity = arch.num_qubits() - arch.num_cores();
    if dag.num_qubits() > capacity {
        return Err(RouteError::Infeasible(format!(
            "{} logical qubits exceed the {capacity} usable physical qubits",
            dag.num_qubits()
        )));
    }
    if let Some(layout) = layout {
        if layout.num_logical() != dag.num_qubits() {
            return Err(RouteError::Infeasible(format!(
                "layout maps {} logical qubits but the circuit has {}",
                layout.num_logical(),
                dag.num_qubits()
            )));
        }
    }
    Ok(())
}

pub(crate) fn deadlock(
    reason: DeadlockReason,
    dag: &CircuitDag,
    layout: &Layout,
    arch: &Architecture,
    stalled_ops: usize,
) -> RouteError {
    RouteError::Deadlock(Box::new(Deadlock {
        reason,
        blocked_gates: dag
            .front()
            .iter()
            .map(|&g| (g, dag.gate(g).qubits))
            .collect(),
        full_cores: (0..arch.num_cores())
            .filter(|&c| layout.free_count(c) < 2)
            .collect(),
        stalled_ops,
        executed_gates: dag.num_gates() - dag.remaining(),
        layout: layout.assignment().to_vec(),
    }))
}

fn front_gates(dag: &CircuitDag) -> Vec<&Gate> {
    dag.front().iter().map(|&g| dag.gate(g)).collect()
}

/// Movement operations worth scoring in the current state:
///
/// * swaps on every coupling edge at a front-gate qubit;
/// * for every cross-core front gate, swaps that bring a free qubit closer
///   to each occupied communication qubit on its route;
/// * teledata of the gate's qubits over links of that route;
/// * telegates of the gate over any link joining its two cores.
///
/// Returned sorted and deduplicated.
pub fn obtain_candidate_ops(
    dag: &CircuitDag,
    layout: &Layout,
    arch: &Architecture,
    params: &RouterParams,
) -> Vec<CandidateOp> {
    let mut ops = BTreeSet::new();
    let ctx = RoutingContext::new(layout, arch);
    let mut traffic = Traffic::new();
    for gate in front_gates(dag) {
        let ends = [layout.phys(gate.qubits[0]), layout.phys(gate.qubits[1])];
        for &p in &ends {
            for &n in arch.neighbors(p) {
                ops.insert(CandidateOp::swap(p, n));
            }
        }
        let (c0, c1) = (arch.core_of(ends[0]), arch.core_of(ends[1]));
        if c0 == c1 {
            continue;
        }
        if let Ok((graph, r)) = route_gate(&ctx, layout, arch, gate, params, &traffic) {
            for &node in &r.path[1..r.path.len() - 1] {
                let c = graph.qubit(node);
                if layout.is_free(c) {
                    continue;
                }
                if let Some((_, f)) = nearest_free(layout, arch, c) {
                    if let Some(n) = arch.next_hop(c, f) {
                        ops.insert(CandidateOp::swap(c, n));
                    }
                    if let Some(n) = arch.next_hop(f, c) {
                        ops.insert(CandidateOp::swap(f, n));
                    }
                }
            }
            for (x, y) in r.links(&graph, arch) {
                traffic.record(x, y);
                for (end, (src, dst)) in [(0, (x, y)), (1, (y, x))] {
                    let logical = gate.qubits[end];
                    if arch.core_of(src) == arch.core_of(ends[end])
                        && teleport_feasible(layout, arch, logical, (src, dst))
                    {
                        ops.insert(CandidateOp::Teledata {
                            logical,
                            src_data: ends[end],
                            src_comm: src,
                            dst_comm: dst,
                        });
                    }
                }
            }
        }
        for link in arch.links_between(c0, c1) {
            if let Some(op) = telegate_op(layout, arch, gate, link) {
                ops.insert(op);
            }
        }
    }
    ops.into_iter().collect()
}

/// Score of each candidate: energy of the layout it produces times the
/// largest usage among the qubits it touches. A telegate's gate leaves the
/// front but the front term keeps the current front size as divisor.
/// `None` marks candidates that cannot be applied or leave a front gate
/// unroutable.
pub fn score_candidates(
    dag: &CircuitDag,
    layout: &Layout,
    arch: &Architecture,
    params: &RouterParams,
    candidates: &[CandidateOp],
) -> Vec<Option<f64>> {
    let front = front_gates(dag);
    let extended: Vec<&Gate> = dag
        .extended_set(params.extended_size)
        .into_iter()
        .map(|g| dag.gate(g))
        .collect();
    let cache = EnergyCache::new(layout, arch, &front, &extended, params);
    candidates
        .iter()
        .map(|op| {
            let next = layout.applied(arch, op).ok()?;
            let ctx = RoutingContext::new(&next, arch);
            let rest: Vec<&Gate> = match op {
                CandidateOp::Telegate { gate, .. } => {
                    front.iter().copied().filter(|g| g.id != *gate).collect()
                }
                _ => front.clone(),
            };
            let energy = cache
                .total_energy(&ctx, &next, arch, &rest, front.len(), &extended, params)
                .ok()?;
            Some(energy * layout.max_usage(&op.touched()))
        })
        .collect()
}

fn is_tied(score: f64, best: f64) -> bool {
    (score - best).abs() <= 1e-9 * best.abs().max(1.0)
}

/// Indices of the minimal scores.
pub fn argmin_set(scores: &[Option<f64>]) -> Vec<usize> {
    let Some(best) = scores.iter().flatten().copied().reduce(f64::min) else {
        return Vec::new();
    };
    scores
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, Some(s) if is_tied(*s, best)))
        .map(|(i, _)| i)
        .collect()
}

/// Uniform choice among the minimal-score candidates.
pub fn score_and_select(
    dag: &CircuitDag,
    layout: &Layout,
    arch: &Architecture,
    params: &RouterParams,
    candidates: &[CandidateOp],
    rng: &mut impl Rng,
) -> Option<CandidateOp> {
    let scores = score_candidates(dag, layout, arch, params, candidates);
    let ties = argmin_set(&scores);
    if ties.is_empty() {
        return None;
    }
    Some(candidates[ties[rng.random_range(0..ties.len())]])
}

/// Routing state for one run.
struct Router<'a> {
    arch: &'a Architecture,
    params: &'a RouterParams,
    dag: CircuitDag,
    layout: Layout,
    builder: ScheduleBuilder,
    stall: usize,
    max_stall: usize,
    rng: ChaCha8Rng,
}

impl<'a> Router<'a> {
    /// Executes front gates until none is executable. Returns whether any ran.
    fn execute_ready(&mut self) -> bool {
        let mut any = false;
        loop {
            let ready: Vec<GateId> = self
                .dag
                .front()
                .iter()
                .copied()
                .filter(|&g| is_gate_executable(&self.layout, self.arch, self.dag.gate(g)))
                .collect();
            if ready.is_empty() {
                break;
            }
            for g in ready {
                self.dag.execute_gate(g).expect("ready gate is in front");
                self.builder.local_gate(&self.dag, g, &self.layout);
            }
            any = true;
        }
        if any {
            self.gate_executed();
        }
        any
    }

    fn gate_executed(&mut self) {
        self.layout.reset_usage();
        self.stall = 0;
    }

    /// Greedily moves the qubits of the cheapest plannable front gate
    /// together. Returns whether any gate was handled.
    fn release(&mut self) -> Result<bool, RouteError> {
        let mut order: Vec<(f64, GateId)> = self
            .dag
            .front()
            .iter()
            .map(|&g| {
                let e = gate_energy(&self.layout, self.arch, self.dag.gate(g), self.params);
                (e.unwrap_or(f64::INFINITY), g)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, g) in order {
            let budget = plan_budget(self.arch);
            let gate = self.dag.gate(g);
            if let Some(ops) = plan_gate(&self.layout, self.arch, gate, budget, &mut self.rng) {
                log::debug!("release valve: {} ops for gate {g}", ops.len());
                for op in ops {
                    self.layout.apply(self.arch, &op)?;
                    self.builder.movement(&self.dag, &op, &self.layout);
                }
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn step(&mut self) -> Result<(), RouteError> {
        if self.params.release_valve.is_some_and(|t| self.stall >= t) && self.release()? {
            return Ok(());
        }
        let candidates = obtain_candidate_ops(&self.dag, &self.layout, self.arch, self.params);
        if candidates.is_empty() {
            return Err(self.deadlock(DeadlockReason::NoCandidates));
        }
        let op = score_and_select(
            &self.dag,
            &self.layout,
            self.arch,
            self.params,
            &candidates,
            &mut self.rng,
        )
        .ok_or_else(|| self.deadlock(DeadlockReason::Unroutable))?;
        log::trace!("commit {op:?}");
        self.layout.apply(self.arch, &op)?;
        self.builder.movement(&self.dag, &op, &self.layout);
        self.layout
            .bump_usage(&op.touched(), self.params.decay_delta);
        if let CandidateOp::Telegate { gate, .. } = op {
            self.dag
                .execute_gate(gate)
                .expect("telegate gate is in front");
            self.gate_executed();
        } else {
            self.stall += 1;
            if self.stall > self.max_stall {
                return Err(self.deadlock(DeadlockReason::StallLimit));
            }
        }
        Ok(())
    }

    fn deadlock(&self, reason: DeadlockReason) -> RouteError {
        let err = deadlock(reason, &self.dag, &self.layout, self.arch, self.stall);
        log::warn!("{err}");
        err
    }
}

/// Routes `dag` starting from `initial`.
pub fn run_from(
    dag: &CircuitDag,
    arch: &Architecture,
    initial: Layout,
    params: &RouterParams,
) -> Result<RoutingResult, RouteError> {
    params.validate().map_err(RouteError::Params)?;
    check_instance(dag, arch, Some(&initial))?;
    let mut dag = dag.clone();
    dag.reset();
    let mut layout = initial;
    layout.reset_usage();
    let builder = ScheduleBuilder::new(arch, &dag, &layout);
    let mut router = Router {
        arch,
        params,
        dag,
        layout,
        builder,
        stall: 0,
        max_stall: params.max_stall_for(arch),
        rng: ChaCha8Rng::seed_from_u64(params.seed),
    };
    while !router.dag.is_done() {
        if !router.execute_ready() {
            router.step()?;
        }
    }
    let Router {
        builder, layout, ..
    } = router;
    Ok(RoutingResult {
        schedule: builder.finish(&layout),
        layout,
    })
}

/// Routes `dag` from the frontier-packing initial layout for `params.seed`.
pub fn run(
    dag: &CircuitDag,
    arch: &Architecture,
    params: &RouterParams,
) -> Result<RoutingResult, RouteError> {
    let initial = initial_layout(arch, dag, params.seed)?;
    run_from(dag, arch, initial, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::architecture::{generate_grid_architecture, GridSpec};
    use crate::circuit::CircuitBuilder;
    use crate::schedule::OpKind;

    fn line_arch(cores: usize) -> Architecture {
        generate_grid_architecture(GridSpec {
            cores_x: cores,
            cores_y: 1,
            core_rows: 1,
            core_cols: 4,
            comm_per_side: 1,
        })
        .unwrap()
    }

    fn dag(n: usize, gates: &[(usize, usize)]) -> CircuitDag {
        let mut b = CircuitBuilder::new(n);
        for &(x, y) in gates {
            b.cx(x, y);
        }
        b.build()
    }

    #[test]
    fn cached_scores_match_direct_energy() {
        use crate::benchmarks::random_circuit;
        use crate::energy::total_energy_normalized;
        use rand::seq::SliceRandom;

        let arch = generate_grid_architecture("grid:2x2,3x3,1".parse().unwrap()).unwrap();
        let params = RouterParams::default();
        for seed in 0..20u64 {
            let d = random_circuit(20, 40, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut phys: Vec<usize> = (0..arch.num_qubits()).collect();
            phys.shuffle(&mut rng);
            phys.truncate(20);
            let Ok(layout) = Layout::new(&arch, phys) else {
                continue;
            };
            let front = front_gates(&d);
            let extended: Vec<&Gate> = d
                .extended_set(params.extended_size)
                .into_iter()
                .map(|g| d.gate(g))
                .collect();
            let ops = obtain_candidate_ops(&d, &layout, &arch, &params);
            let scores = score_candidates(&d, &layout, &arch, &params, &ops);
            for (op, score) in ops.iter().zip(scores) {
                let next = layout.applied(&arch, op).unwrap();
                let ctx = RoutingContext::new(&next, &arch);
                let rest: Vec<&Gate> = match op {
                    CandidateOp::Telegate { gate, .. } => {
                        front.iter().copied().filter(|g| g.id != *gate).collect()
                    }
                    _ => front.clone(),
                };
                let direct = total_energy_normalized(
                    &ctx,
                    &next,
                    &arch,
                    &rest,
                    front.len(),
                    &extended,
                    &params,
                )
                .ok()
                .map(|e| e * layout.max_usage(&op.touched()));
                assert_eq!(score, direct, "seed {seed} op {op:?}");
            }
        }
    }

    #[test]
    fn local_swap_candidates() {
        let arch = line_arch(2);
        let d = dag(2, &[(0, 1)]);
        let layout = Layout::new(&arch, vec![0, 2]).unwrap();
        let ops = obtain_candidate_ops(&d, &layout, &arch, &RouterParams::default());
        assert!(ops.contains(&CandidateOp::swap(0, 1)));
        assert!(ops.contains(&CandidateOp::swap(1, 2)));
        assert!(ops.contains(&CandidateOp::swap(2, 3)));
        assert!(ops.iter().all(|op| !op.is_intercore()));
    }

    #[test]
    fn vacating_swap_for_occupied_comm() {
        // q0 at 2 next to comm 3; q2 parks on comm 4 with 5 free next to it;
        // q1 at 6 in core 1.
        let arch = line_arch(2);
        let d = dag(3, &[(0, 1)]);
        let layout = Layout::new(&arch, vec![2, 6, 4]).unwrap();
        let ops = obtain_candidate_ops(&d, &layout, &arch, &RouterParams::default());
        assert!(ops.contains(&CandidateOp::swap(4, 5)), "{ops:?}");
    }

    #[test]
    fn telegate_candidate_in_direct_configuration() {
        let arch = line_arch(2);
        let d = dag(2, &[(0, 1)]);
        let layout = Layout::new(&arch, vec![2, 5]).unwrap();
        let ops = obtain_candidate_ops(&d, &layout, &arch, &RouterParams::default());
        assert!(ops.contains(&CandidateOp::Telegate {
            gate: 0,
            data: [2, 5],
            comms: [3, 4]
        }));
        assert!(ops.contains(&CandidateOp::Teledata {
            logical: 0,
            src_data: 2,
            src_comm: 3,
            dst_comm: 4
        }));
    }

    #[test]
    fn selection_is_argmin_with_decay() {
        let scores = vec![Some(3.0), Some(2.0)];
        assert_eq!(argmin_set(&scores), vec![1]);
        let scores = vec![Some(2.0 * 1.0), Some(2.0 * 1.001), None];
        assert_eq!(argmin_set(&scores), vec![0]);
        assert!(argmin_set(&[None, None]).is_empty());
    }

    #[test]
    fn already_satisfied_circuit_needs_no_movement() {
        let arch = line_arch(2);
        let d = dag(3, &[(0, 1), (1, 2), (0, 1)]);
        let layout = Layout::new(&arch, vec![0, 1, 2]).unwrap();
        let result = run_from(&d, &arch, layout, &RouterParams::default()).unwrap();
        let s = &result.schedule;
        assert_eq!((s.swaps(), s.teledata(), s.telegates()), (0, 0, 0));
        assert_eq!(s.ops.len(), 3);
    }

    #[test]
    fn single_cross_core_gate_uses_one_telegate() {
        let arch = line_arch(2);
        let d = dag(2, &[(0, 1)]);
        let layout = Layout::new(&arch, vec![2, 5]).unwrap();
        let result = run_from(&d, &arch, layout, &RouterParams::default()).unwrap();
        assert_eq!(
            result
                .schedule
                .ops
                .iter()
                .map(|o| o.kind.clone())
                .collect::<Vec<_>>(),
            vec![OpKind::Telegate {
                gate: 0,
                qubits: [2, 5],
                comms: [3, 4]
            }]
        );
    }

    #[test]
    fn runs_are_deterministic() {
        let arch = line_arch(3);
        let d = dag(6, &[(0, 5), (1, 4), (2, 3), (0, 3), (5, 1), (4, 2), (0, 1)]);
        let params = RouterParams::with_seed(11);
        let a = run(&d, &arch, &params).unwrap();
        let b = run(&d, &arch, &params).unwrap();
        assert_eq!(a.schedule.to_json(), b.schedule.to_json());
    }

    #[test]
    fn deadlock_through_full_middle_core() {
        // Cores 0-1-2 in a line; core 1 has a single free qubit so nothing can
        // pass through it, and cores 0 and 2 are not linked.
        let arch = line_arch(3);
        let d = dag(5, &[(0, 1)]);
        let layout = Layout::new(&arch, vec![1, 9, 4, 5, 6]).unwrap();
        let params = RouterParams {
            max_stall: Some(50),
            release_valve: None,
            ..RouterParams::default()
        };
        match run_from(&d, &arch, layout.clone(), &params) {
            Err(RouteError::Deadlock(info)) => {
                assert_eq!(info.full_cores, vec![1]);
                assert_eq!(info.blocked_gates, vec![(0, [0, 1])]);
            }
            other => panic!("expected deadlock, got {other:?}"),
        }
        // The release valve evicts a qubit from the middle core instead.
        let result = run_from(&d, &arch, layout, &RouterParams::default()).unwrap();
        assert!(crate::verify::verify(&d, &arch, &result.schedule).is_ok());
    }

    #[test]
    fn rejects_oversubscribed_instances() {
        let arch = line_arch(2);
        let d = dag(7, &[(0, 1)]);
        assert!(matches!(
            run(&d, &arch, &RouterParams::default()),
            Err(RouteError::Infeasible(_))
        ));
    }
}
