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

//! Greedy teleport-on-demand router.
//!
//! Front gates are handled one at a time in id order. Qubits in one core
//! are brought together with shortest-path swaps; qubits in different cores
//! are teleported core by core along a fewest-link core path. Never uses
//! telegates and never looks ahead.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::architecture::Architecture;
use crate::circuit::{CircuitDag, Gate, GateId};
use crate::layout::{is_gate_executable, nearest_free, CandidateOp, Layout};
use crate::router::{check_instance, deadlock, DeadlockReason, RouteError, RoutingResult};
use crate::schedule::ScheduleBuilder;

/// Plans moves on a scratch layout.
struct Planner<'a, R: Rng> {
    arch: &'a Architecture,
    layout: Layout,
    ops: Vec<CandidateOp>,
    budget: usize,
    rng: &'a mut R,
}

impl<R: Rng> Planner<'_, R> {
    fn commit(&mut self, op: CandidateOp) -> Option<()> {
        self.budget = self.budget.checked_sub(1)?;
        self.layout.apply(self.arch, &op).ok()?;
        self.ops.push(op);
        Some(())
    }

    /// Moves the free qubit closest to `target` one step toward it.
    fn pull_hole(&mut self, target: usize) -> Option<()> {
        let (_, f) = nearest_free(&self.layout, self.arch, target)?;
        let n = self.arch.next_hop(f, target)?;
        self.commit(CandidateOp::swap(f, n))
    }

    /// Fewest-link core path; with `need_room` every entered core must be
    /// able to accept a teleported qubit.
    fn core_path(&self, from: usize, to: usize, need_room: bool) -> Option<Vec<usize>> {
        let mut prev = vec![usize::MAX; self.arch.num_cores()];
        prev[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            if c == to {
                let mut path = vec![to];
                while *path.last().unwrap() != from {
                    path.push(prev[*path.last().unwrap()]);
                }
                path.reverse();
                return Some(path);
            }
            for n in self.arch.adjacent_cores(c) {
                if prev[n] == usize::MAX && (!need_room || self.layout.free_count(n) >= 2) {
                    prev[n] = c;
                    queue.push_back(n);
                }
            }
        }
        None
    }

    /// Teleports `logical` into the adjacent core `to`, preparing the link
    /// with swaps first.
    fn teleport(&mut self, logical: usize, to: usize) -> Option<()> {
        let p = self.layout.phys(logical);
        let links = self.arch.links_between(self.arch.core_of(p), to);
        let best = links.iter().map(|&(a, _)| self.arch.hops(p, a)).min()?;
        let near: Vec<(usize, usize)> = links
            .into_iter()
            .filter(|&(a, _)| self.arch.hops(p, a) == best)
            .collect();
        let (a, b) = near[self.rng.random_range(0..near.len())];
        if self.layout.free_count(to) < 2 {
            return None;
        }
        loop {
            let p = self.layout.phys(logical);
            if !self.layout.is_free(a) {
                self.pull_hole(a)?;
            } else if self.arch.hops(p, a) > 1 {
                let n = self.arch.next_hop(p, a)?;
                self.commit(CandidateOp::swap(p, n))?;
            } else if !self.layout.is_free(b) {
                self.pull_hole(b)?;
            } else {
                return self.commit(CandidateOp::Teledata {
                    logical,
                    src_data: p,
                    src_comm: a,
                    dst_comm: b,
                });
            }
        }
    }

    /// Qubit of core `from` other than `keep` closest to a link into `to`.
    fn victim(&self, from: usize, to: usize, keep: [usize; 2]) -> Option<(u32, usize)> {
        let mut best: Option<(u32, usize)> = None;
        for (a, _) in self.arch.links_between(from, to) {
            for &p in self.arch.core_qubits(from) {
                let Some(v) = self.layout.logical_at(p) else {
                    continue;
                };
                if keep.contains(&v) {
                    continue;
                }
                let key = (self.arch.hops(p, a), v);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        best
    }

    /// Fewest-link core path from `from` to the closest core with room.
    fn path_to_room(&self, from: usize) -> Option<Vec<usize>> {
        (0..self.arch.num_cores())
            .filter(|&c| c != from && self.layout.free_count(c) >= 2)
            .filter_map(|c| self.core_path(from, c, false))
            .min_by_key(|path| path.len())
    }

    /// Moves some other qubit out of the full core `core` into a neighbour
    /// with room, preferring cores off `path`. When every neighbour is full,
    /// the last full core on the way to the closest core with room is
    /// drained first.
    fn evict(&mut self, core: usize, keep: [usize; 2], path: &[usize]) -> Option<()> {
        let mut best: Option<(bool, u32, usize, usize)> = None;
        for to in self.arch.adjacent_cores(core) {
            if self.layout.free_count(to) < 2 {
                continue;
            }
            if let Some((d, v)) = self.victim(core, to, keep) {
                let key = (path.contains(&to), d, to, v);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        if let Some((_, _, to, v)) = best {
            return self.teleport(v, to);
        }
        let drain = self.path_to_room(core)?;
        let [from, to] = drain[drain.len() - 2..] else {
            return None;
        };
        let (_, v) = self.victim(from, to, keep)?;
        self.teleport(v, to)
    }

    /// Plans moves until `gate` is executable locally.
    fn resolve(&mut self, gate: &Gate) -> Option<()> {
        let [q1, q2] = gate.qubits;
        loop {
            let (p1, p2) = (self.layout.phys(q1), self.layout.phys(q2));
            let (c1, c2) = (self.arch.core_of(p1), self.arch.core_of(p2));
            if c1 == c2 {
                if self.arch.are_coupled(p1, p2) {
                    return Some(());
                }
                let n = self.arch.next_hop(p1, p2)?;
                self.commit(CandidateOp::swap(p1, n))?;
            } else if let Some(path) = self.core_path(c1, c2, true) {
                self.teleport(q1, path[1])?;
            } else if let Some(path) = self.core_path(c2, c1, true) {
                self.teleport(q2, path[1])?;
            } else {
                let path = self.core_path(c1, c2, false)?;
                let blocked = *path[1..].iter().find(|&&c| self.layout.free_count(c) < 2)?;
                self.evict(blocked, gate.qubits, &path)?;
            }
        }
    }
}

/// Operations that make `gate` locally executable from `layout`, or `None`
/// when the greedy strategy gets stuck within `budget` operations.
pub fn plan_gate(
    layout: &Layout,
    arch: &Architecture,
    gate: &Gate,
    budget: usize,
    rng: &mut impl Rng,
) -> Option<Vec<CandidateOp>> {
    let mut planner = Planner {
        arch,
        layout: layout.clone(),
        ops: Vec::new(),
        budget,
        rng,
    };
    planner.resolve(gate)?;
    Some(planner.ops)
}

pub(crate) fn plan_budget(arch: &Architecture) -> usize {
    10 * arch.num_qubits()
}

/// Greedy routing of `dag` from `initial`. `seed` breaks ties between
/// equally close links.
pub fn run_greedy(
    dag: &CircuitDag,
    arch: &Architecture,
    initial: Layout,
    seed: u64,
) -> Result<RoutingResult, RouteError> {
    check_instance(dag, arch, Some(&initial))?;
    let mut dag = dag.clone();
    dag.reset();
    let mut layout = initial;
    let mut builder = ScheduleBuilder::new(arch, &dag, &layout);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        loop {
            let ready: Vec<GateId> = dag
                .front()
                .iter()
                .copied()
                .filter(|&g| is_gate_executable(&layout, arch, dag.gate(g)))
                .collect();
            if ready.is_empty() {
                break;
            }
            for g in ready {
                dag.execute_gate(g).expect("front gate");
                builder.local_gate(&dag, g, &layout);
            }
        }
        let Some(&next) = dag.front().first() else {
            break;
        };
        let ops = plan_gate(&layout, arch, dag.gate(next), plan_budget(arch), &mut rng)
            .ok_or_else(|| deadlock(DeadlockReason::Unroutable, &dag, &layout, arch, 0))?;
        for op in ops {
            layout.apply(arch, &op)?;
            builder.movement(&dag, &op, &layout);
        }
    }
    Ok(RoutingResult {
        schedule: builder.finish(&layout),
        layout,
    })
}
