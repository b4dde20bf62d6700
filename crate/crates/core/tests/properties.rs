use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use telesabre::architecture::generate_grid_architecture;
use telesabre::benchmarks::random_circuit;
use telesabre::circuit::CircuitBuilder;
use telesabre::energy::{
    build_contracted_graph, gate_energy, route, route_gate, RoutingContext, Traffic,
};
use telesabre::layout::{telegate_op, teleport_feasible};
use telesabre::schedule::{compute_depth, Durations};
use telesabre::*;

const GRIDS: [&str; 6] = [
    "grid:2x1,2x2,1",
    "grid:2x1,2x3,1",
    "grid:3x1,2x3,1",
    "grid:2x2,3x3,1",
    "grid:2x2,2x3,2",
    "grid:3x2,3x3,2",
];

fn grid(i: usize) -> Architecture {
    generate_grid_architecture(GRIDS[i % GRIDS.len()].parse().unwrap()).unwrap()
}

/// Random instance that leaves at least two free qubits per core on average.
fn instance(arch_idx: usize, load: f64, gates: usize, seed: u64) -> (Architecture, CircuitDag) {
    let arch = grid(arch_idx);
    let room = arch.num_qubits() - 2 * arch.num_cores();
    let n = ((room as f64 * load) as usize).clamp(2, room.max(2));
    (arch, random_circuit(n, gates, seed))
}

fn recomputed_front(dag: &CircuitDag) -> BTreeSet<GateId> {
    dag.gates()
        .iter()
        .filter(|g| !dag.is_executed(g.id) && g.predecessors.iter().all(|&p| dag.is_executed(p)))
        .map(|g| g.id)
        .collect()
}

fn edge_set(dag: &CircuitDag) -> BTreeSet<(GateId, GateId)> {
    dag.gates()
        .iter()
        .flat_map(|g| g.successors.iter().map(move |&s| (g.id, s)))
        .collect()
}

fn bfs(arch: &Architecture, src: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; arch.num_qubits()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &v in arch.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(dist[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

fn random_layout(arch: &Architecture, n: usize, rng: &mut ChaCha8Rng) -> Layout {
    loop {
        let mut phys: Vec<usize> = (0..arch.num_qubits()).collect();
        phys.shuffle(rng);
        phys.truncate(n);
        if let Ok(l) = Layout::new(arch, phys) {
            return l;
        }
    }
}

fn assert_layout_invariants(arch: &Architecture, layout: &Layout, n: usize) {
    assert_eq!(layout.num_logical(), n);
    let mut hosted = vec![None; arch.num_qubits()];
    for q in 0..n {
        let p = layout.phys(q);
        assert!(hosted[p].is_none(), "physical {p} hosts two qubits");
        hosted[p] = Some(q);
        assert_eq!(layout.logical_at(p), Some(q));
    }
    for (p, h) in hosted.iter().enumerate() {
        assert_eq!(layout.logical_at(p), *h);
    }
    for c in 0..arch.num_cores() {
        assert!(layout.free_count(c) >= 1, "core {c} has no free qubit");
    }
}

/// Every feasible movement for the qubits of `dag`'s gates.
fn legal_moves(arch: &Architecture, layout: &Layout, dag: &CircuitDag) -> Vec<CandidateOp> {
    let mut ops: Vec<CandidateOp> = arch
        .intra_edges()
        .filter(|&(a, b)| !(layout.is_free(a) && layout.is_free(b)))
        .map(|(a, b)| CandidateOp::swap(a, b))
        .collect();
    for q in 0..layout.num_logical() {
        for &(x, y) in arch.links() {
            for link in [(x, y), (y, x)] {
                if teleport_feasible(layout, arch, q, link) {
                    ops.push(CandidateOp::Teledata {
                        logical: q,
                        src_data: layout.phys(q),
                        src_comm: link.0,
                        dst_comm: link.1,
                    });
                }
            }
        }
    }
    for g in dag.gates() {
        for &link in arch.links() {
            ops.extend(telegate_op(layout, arch, g, link));
        }
    }
    ops
}

/// Replays the movement ops of `schedule` from its initial layout.
fn replay(arch: &Architecture, schedule: &Schedule) -> Layout {
    let mut layout = Layout::new(arch, schedule.initial_layout.clone()).unwrap();
    for op in &schedule.ops {
        let cand = match op.kind {
            OpKind::Swap { qubits } => CandidateOp::swap(qubits[0], qubits[1]),
            OpKind::Teledata {
                logical,
                src_data,
                src_comm,
                dst_comm,
            } => CandidateOp::Teledata {
                logical,
                src_data,
                src_comm,
                dst_comm,
            },
            _ => continue,
        };
        layout.apply(arch, &cand).unwrap();
    }
    layout
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn front_matches_recomputation(n in 2usize..10, gates in 0usize..40, seed: u64, order: u64) {
        let mut dag = random_circuit(n, gates, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(order);
        let mut executed = 0;
        while !dag.is_done() {
            prop_assert_eq!(dag.front(), &recomputed_front(&dag));
            let ext = dag.extended_set(rng.random_range(0..8));
            for g in &ext {
                prop_assert!(!dag.front().contains(g));
                prop_assert!(!dag.is_executed(*g));
            }
            let front: Vec<GateId> = dag.front().iter().copied().collect();
            let g = front[rng.random_range(0..front.len())];
            dag.execute_gate(g).unwrap();
            executed += 1;
            prop_assert_eq!(executed + dag.remaining(), dag.num_gates());
            prop_assert!(dag.execute_gate(g).is_err());
        }
        prop_assert_eq!(executed, gates);
    }

    #[test]
    fn double_reverse_preserves_edges(n in 2usize..10, gates in 0usize..40, seed: u64) {
        let dag = random_circuit(n, gates, seed);
        let rev = dag.reverse();
        let flipped: BTreeSet<_> = edge_set(&dag).into_iter().map(|(a, b)| (b, a)).collect();
        prop_assert_eq!(edge_set(&rev), flipped);
        prop_assert_eq!(edge_set(&rev.reverse()), edge_set(&dag));
    }

    #[test]
    fn distances_equal_bfs(cx in 1usize..4, cy in 1usize..3, rows in 1usize..5, cols in 2usize..5) {
        let spec = GridSpec { cores_x: cx, cores_y: cy, core_rows: rows, core_cols: cols, comm_per_side: 1 };
        let arch = generate_grid_architecture(spec).unwrap();
        for a in 0..arch.num_qubits() {
            let d = bfs(&arch, a);
            for (b, &want) in d.iter().enumerate() {
                prop_assert_eq!(arch.distances().get(a, b), want);
            }
        }
        let again = generate_grid_architecture(spec).unwrap();
        prop_assert_eq!(arch.to_json(), again.to_json());
    }

    #[test]
    fn random_moves_keep_layout_valid(arch_idx in 0usize..6, load in 0.2f64..1.0, seed: u64, steps in 1usize..60) {
        let (arch, dag) = instance(arch_idx, load, 12, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dag.num_qubits();
        let mut layout = random_layout(&arch, n, &mut rng);
        for _ in 0..steps {
            let ops = legal_moves(&arch, &layout, &dag);
            let op = ops[rng.random_range(0..ops.len())];
            let before = layout.clone();
            layout.apply(&arch, &op).unwrap();
            assert_layout_invariants(&arch, &layout, n);
            match op {
                CandidateOp::Swap { .. } => {
                    let mut back = layout.clone();
                    back.apply(&arch, &op).unwrap();
                    prop_assert_eq!(back.assignment(), before.assignment());
                }
                CandidateOp::Telegate { .. } => prop_assert_eq!(layout.assignment(), before.assignment()),
                CandidateOp::Teledata { .. } => {}
            }
        }
    }

    #[test]
    fn energy_is_nonnegative_and_bounded_below(arch_idx in 0usize..6, load in 0.2f64..1.0, seed: u64, tw in 0.1f64..5.0) {
        let (arch, dag) = instance(arch_idx, load, 10, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&arch, dag.num_qubits(), &mut rng);
        let params = RouterParams { teleport_base_weight: tw, ..RouterParams::default() };
        let ctx = RoutingContext::new(&layout, &arch);
        for g in dag.gates() {
            let Ok(graph) = build_contracted_graph(&layout, &arch, g, &params) else { continue };
            for (_, _, w) in graph.edges() {
                prop_assert!(w >= 0.0);
            }
            if let Ok((_, r)) = route_gate(&ctx, &layout, &arch, g, &params, &Traffic::new()) {
                prop_assert!(r.length >= tw - 1e-12);
                prop_assert_eq!(gate_energy(&layout, &arch, g, &params).unwrap(), r.length);
            }
        }
    }

    #[test]
    fn energy_ignores_logical_labels(arch_idx in 0usize..6, load in 0.2f64..1.0, seed: u64) {
        let (arch, dag) = instance(arch_idx, load, 10, seed);
        let n = dag.num_qubits();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&arch, n, &mut rng);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        // Logical q becomes perm[q] and keeps its physical position.
        let mut phys = vec![0; n];
        for q in 0..n {
            phys[perm[q]] = layout.phys(q);
        }
        let relabeled = Layout::new(&arch, phys).unwrap();
        let params = RouterParams::default();
        for g in dag.gates() {
            let mut b = CircuitBuilder::new(n);
            b.cx(perm[g.qubits[0]], perm[g.qubits[1]]);
            let moved = b.build();
            let x = gate_energy(&layout, &arch, g, &params);
            let y = gate_energy(&relabeled, &arch, moved.gate(0), &params);
            prop_assert_eq!(x.ok(), y.ok());
        }
    }

    #[test]
    fn swaps_along_shortest_path_lower_local_energy(arch_idx in 0usize..6, seed: u64) {
        let arch = grid(arch_idx);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = arch.num_qubits() - 2 * arch.num_cores();
        let mut layout = random_layout(&arch, n.max(2), &mut rng);
        let core = layout.core_of_logical(&arch, 0);
        let Some(partner) = (1..layout.num_logical()).find(|&q| layout.core_of_logical(&arch, q) == core) else {
            return Ok(());
        };
        let mut b = CircuitBuilder::new(layout.num_logical());
        b.cx(0, partner);
        let dag = b.build();
        let params = RouterParams::default();
        let mut e = gate_energy(&layout, &arch, dag.gate(0), &params).unwrap();
        while e > 1.0 {
            let (a, t) = (layout.phys(0), layout.phys(partner));
            let next = arch.neighbors(a).iter().copied().find(|&v| arch.hops(v, t) + 1 == arch.hops(a, t)).unwrap();
            layout.apply(&arch, &CandidateOp::swap(a, next)).unwrap();
            let after = gate_energy(&layout, &arch, dag.gate(0), &params).unwrap();
            prop_assert_eq!(after, e - 1.0);
            e = after;
        }
    }

    #[test]
    fn route_matches_enumeration(n in 2usize..10, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = vec![vec![None; n]; n];
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(0.4) {
                    let x = rng.random_range(0..6) as f64 / 2.0;
                    w[u][v] = Some(x);
                    w[v][u] = Some(x);
                    edges.push((u, v, x));
                }
            }
        }
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut stack = vec![(vec![0usize], 0.0f64)];
        while let Some((path, len)) = stack.pop() {
            let u = *path.last().unwrap();
            if u == 1 {
                let better = match &best {
                    None => true,
                    Some((l, p)) => len < l - 1e-9 || ((len - l).abs() <= 1e-9 && &path < p),
                };
                if better {
                    best = Some((len, path));
                }
                continue;
            }
            for v in 0..n {
                if let Some(x) = w[u][v] {
                    if !path.contains(&v) {
                        let mut p = path.clone();
                        p.push(v);
                        stack.push((p, len + x));
                    }
                }
            }
        }
        let graph = energy::ContractedGraph::from_edges((0..n).collect(), &edges);
        let got = route(&graph, 0, 1).map(|r| (r.length, r.path));
        prop_assert_eq!(got, best);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn router_output_verifies_and_replays(arch_idx in 0usize..6, load in 0.2f64..1.0, gates in 1usize..40, seed: u64) {
        let (arch, dag) = instance(arch_idx, load, gates, seed);
        let params = RouterParams::with_seed(seed);
        let Ok(result) = run(&dag, &arch, &params) else { return Ok(()) };
        let s = &result.schedule;
        let report = verify(&dag, &arch, s);
        prop_assert!(report.is_ok(), "{:?}", report.violations);
        let replayed = replay(&arch, s);
        prop_assert_eq!(replayed.assignment(), result.layout.assignment());
        prop_assert_eq!(&s.final_layout, &result.layout.assignment().to_vec());
        assert_layout_invariants(&arch, &result.layout, dag.num_qubits());
        // Gates run exactly once.
        let mut seen = vec![0; dag.num_gates()];
        let mut stall = 0;
        for op in &s.ops {
            match op.kind {
                OpKind::LocalGate { gate, .. } | OpKind::Telegate { gate, .. } => {
                    seen[gate] += 1;
                    stall = 0;
                }
                OpKind::Swap { .. } | OpKind::Teledata { .. } => {
                    stall += 1;
                    prop_assert!(stall <= params.max_stall_for(&arch));
                }
                OpKind::Single { .. } => {}
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        // Counts come from the op stream.
        let m = s.metrics();
        let count = |f: fn(&OpKind) -> bool| s.ops.iter().filter(|o| f(&o.kind)).count();
        prop_assert_eq!(m.swaps, count(|k| matches!(k, OpKind::Swap { .. })));
        prop_assert_eq!(m.teledata, count(|k| matches!(k, OpKind::Teledata { .. })));
        prop_assert_eq!(m.telegate, count(|k| matches!(k, OpKind::Telegate { .. })));
        prop_assert_eq!(m.intercore_total, m.teledata + m.telegate);
    }

    #[test]
    fn greedy_output_verifies(arch_idx in 0usize..6, load in 0.2f64..1.0, gates in 1usize..40, seed: u64) {
        let (arch, dag) = instance(arch_idx, load, gates, seed);
        let initial = initial_layout(&arch, &dag, seed).unwrap();
        let Ok(result) = run_greedy(&dag, &arch, initial, seed) else { return Ok(()) };
        let report = verify(&dag, &arch, &result.schedule);
        prop_assert!(report.is_ok(), "{:?}", report.violations);
        prop_assert_eq!(result.schedule.telegates(), 0);
        assert_layout_invariants(&arch, &result.layout, dag.num_qubits());
    }

    #[test]
    fn depth_ignores_logical_labels(arch_idx in 0usize..6, load in 0.2f64..1.0, gates in 1usize..30, seed: u64) {
        let (arch, dag) = instance(arch_idx, load, gates, seed);
        let Ok(result) = run(&dag, &arch, &RouterParams::with_seed(seed)) else { return Ok(()) };
        let n = dag.num_qubits();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut relabeled = result.schedule.clone();
        for op in &mut relabeled.ops {
            match &mut op.kind {
                OpKind::Single { logical, .. } | OpKind::Teledata { logical, .. } => *logical = perm[*logical],
                _ => {}
            }
        }
        for layout in [&mut relabeled.initial_layout, &mut relabeled.final_layout] {
            let old = layout.clone();
            for q in 0..n {
                layout[perm[q]] = old[q];
            }
        }
        let unit = Durations::default();
        prop_assert_eq!(compute_depth(&relabeled, &unit), compute_depth(&result.schedule, &unit));
    }

    #[test]
    fn initial_front_pairs_share_cores(arch_idx in 0usize..6, load in 0.2f64..1.0, gates in 1usize..30, seed: u64) {
        let (arch, dag) = instance(arch_idx, load, gates, seed);
        let layout = initial_layout(&arch, &dag, seed).unwrap();
        let n = dag.num_qubits();
        assert_layout_invariants(&arch, &layout, n);
        // Each core may take its capacity share of the qubits; pairs fit
        // when those shares hold every front pair.
        let caps: Vec<usize> = (0..arch.num_cores()).map(|c| arch.core_qubits(c).len() - 1).collect();
        let total: usize = caps.iter().sum();
        let pair_slots: usize = caps.iter().map(|&c| c.min((n * c).div_ceil(total)) / 2).sum();
        let front: Vec<&Gate> = dag.front().iter().map(|&g| dag.gate(g)).collect();
        if front.len() <= pair_slots {
            for g in front {
                prop_assert_eq!(layout.core_of_logical(&arch, g.qubits[0]), layout.core_of_logical(&arch, g.qubits[1]));
            }
        }
    }

    #[test]
    fn oracle_bounds_router_on_tiny_instances(n in 2usize..6, gates in 1usize..6, seed: u64) {
        let arch = grid(0);
        let dag = random_circuit(n, gates, seed);
        let initial = initial_layout(&arch, &dag, seed).unwrap();
        let sol = solve_exact(&dag, &arch, &initial, OracleLimits::default()).unwrap();
        let report = verify(&dag, &arch, &sol.schedule);
        prop_assert!(report.is_ok(), "{:?}", report.violations);
        prop_assert_eq!((sol.schedule.intercore(), sol.schedule.swaps()), sol.cost());
        if let Ok(r) = run_from(&dag, &arch, initial, &RouterParams::with_seed(seed)) {
            prop_assert!((r.schedule.intercore(), r.schedule.swaps()) >= sol.cost());
        }
    }
}
