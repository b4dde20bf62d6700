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

//! Exhaustive solver for tiny instances.
//!
//! A search state is a layout plus the set of executed gates. Executable
//! front gates run for free, so every state is settled before it is stored.
//! Moves are every intra-core swap, every feasible teledata of any qubit over
//! any link and every feasible telegate of a front gate. Costs compare as
//! (inter-core ops, swaps). States are expanded in cost buckets ordered by
//! inter-core count first and swaps second, which deepens on inter-core ops
//! and sweeps swaps breadth-first inside each level, so the first finished
//! state popped is optimal.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::architecture::Architecture;
use crate::circuit::CircuitDag;
use crate::layout::{is_gate_executable, telegate_op, teleport_feasible, CandidateOp, Layout};
use crate::router::{check_instance, RouteError};
use crate::schedule::{Schedule, ScheduleBuilder};

/// Search limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    /// Largest total number of movement operations considered.
    pub max_ops: usize,
    pub time_budget: Duration,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_ops: 16,
            time_budget: Duration::from_secs(30),
        }
    }
}

/// Optimal counts with a schedule achieving them.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub intercore: usize,
    pub swaps: usize,
    pub states: usize,
    pub schedule: Schedule,
}

impl OracleSolution {
    pub fn cost(&self) -> (usize, usize) {
        (self.intercore, self.swaps)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    /// Every solution costs at least `bound`.
    #[error("time budget exhausted; every solution costs at least {bound:?} (inter-core, swaps)")]
    Timeout {
        bound: (usize, usize),
        states: usize,
    },
    #[error("no solution within {max_ops} operations")]
    OpLimit { max_ops: usize },
    #[error("instance has {0} gates; at most 64 are supported")]
    TooLarge(usize),
    #[error(transparent)]
    Instance(#[from] RouteError),
}

type Key = (Vec<usize>, u64);

struct Node {
    key: Key,
    parent: Option<(usize, CandidateOp)>,
}

struct Search<'a> {
    dag: &'a CircuitDag,
    arch: &'a Architecture,
    intra: Vec<(usize, usize)>,
    links: Vec<(usize, usize)>,
    done: u64,
}

impl Search<'_> {
    fn layout(&self, phys: &[usize]) -> Layout {
        Layout::new(self.arch, phys.to_vec()).expect("search keeps layouts valid")
    }

    fn front(&self, executed: u64) -> impl Iterator<Item = usize> + '_ {
        self.dag.gates().iter().filter_map(move |g| {
            let ready = executed & (1 << g.id) == 0
                && g.predecessors.iter().all(|&p| executed & (1 << p) != 0);
            ready.then_some(g.id)
        })
    }

    /// Executes front gates until none is locally executable, in rounds of
    /// ascending id; `on_gate` sees each execution.
    fn settle(&self, layout: &Layout, mut executed: u64, mut on_gate: impl FnMut(usize)) -> u64 {
        loop {
            let ready: Vec<usize> = self
                .front(executed)
                .filter(|&g| is_gate_executable(layout, self.arch, self.dag.gate(g)))
                .collect();
            if ready.is_empty() {
                return executed;
            }
            for g in ready {
                executed |= 1 << g;
                on_gate(g);
            }
        }
    }

    fn moves(&self, layout: &Layout, executed: u64) -> Vec<CandidateOp> {
        let mut ops = Vec::new();
        for &(a, b) in &self.intra {
            if !(layout.is_free(a) && layout.is_free(b)) {
                ops.push(CandidateOp::swap(a, b));
            }
        }
        for q in 0..layout.num_logical() {
            let p = layout.phys(q);
            for &(x, y) in &self.links {
                for (src, dst) in [(x, y), (y, x)] {
                    if teleport_feasible(layout, self.arch, q, (src, dst)) {
                        ops.push(CandidateOp::Teledata {
                            logical: q,
                            src_data: p,
                            src_comm: src,
                            dst_comm: dst,
                        });
                    }
                }
            }
        }
        for g in self.front(executed) {
            for &link in &self.links {
                if let Some(op) = telegate_op(layout, self.arch, self.dag.gate(g), link) {
                    ops.push(op);
                }
            }
        }
        ops
    }

    /// Successor key after `op`, with the telegated gate marked executed.
    fn successor(&self, layout: &Layout, executed: u64, op: &CandidateOp) -> Option<Key> {
        let next = layout.applied(self.arch, op).ok()?;
        let mut executed = executed;
        if let CandidateOp::Telegate { gate, .. } = op {
            executed |= 1 << gate;
        }
        let executed = self.settle(&next, executed, |_| {});
        Some((next.assignment().to_vec(), executed))
    }

    fn witness(&self, initial: &Layout, moves: &[CandidateOp]) -> Schedule {
        let mut dag = self.dag.clone();
        dag.reset();
        let mut layout = initial.clone();
        let mut builder = ScheduleBuilder::new(self.arch, &dag, &layout);
        let mut ran = Vec::new();
        let mut executed = self.settle(&layout, 0, |g| ran.push(g));
        for op in moves {
            for g in ran.drain(..) {
                dag.execute_gate(g).expect("settled gate is in front");
                builder.local_gate(&dag, g, &layout);
            }
            layout.apply(self.arch, op).expect("witness move is legal");
            builder.movement(&dag, op, &layout);
            if let CandidateOp::Telegate { gate, .. } = *op {
                dag.execute_gate(gate).expect("telegated gate is in front");
                executed |= 1 << gate;
            }
            executed = self.settle(&layout, executed, |g| ran.push(g));
        }
        for g in ran.drain(..) {
            dag.execute_gate(g).expect("settled gate is in front");
            builder.local_gate(&dag, g, &layout);
        }
        debug_assert_eq!(executed, self.done);
        builder.finish(&layout)
    }
}

/// Minimal (inter-core ops, swaps) schedule for `dag` from `initial`.
pub fn solve_exact(
    dag: &CircuitDag,
    arch: &Architecture,
    initial: &Layout,
    limits: OracleLimits,
) -> Result<OracleSolution, OracleError> {
    check_instance(dag, arch, Some(initial))?;
    if dag.num_gates() > 64 {
        return Err(OracleError::TooLarge(dag.num_gates()));
    }
    let started = Instant::now();
    let search = Search {
        dag,
        arch,
        intra: arch.intra_edges().collect(),
        links: arch.links().to_vec(),
        done: if dag.num_gates() == 64 {
            u64::MAX
        } else {
            (1u64 << dag.num_gates()) - 1
        },
    };
    let start_exec = search.settle(initial, 0, |_| {});
    let mut nodes = vec![Node {
        key: (initial.assignment().to_vec(), start_exec),
        parent: None,
    }];
    // Best known cost per key; a node is expanded once, at its final cost.
    let mut best: HashMap<Key, (usize, usize)> = HashMap::new();
    best.insert(nodes[0].key.clone(), (0, 0));
    let mut open: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::from([((0, 0), vec![0])]);
    let mut expanded = 0usize;
    while let Some(mut bucket) = open.first_entry() {
        let (level, swaps) = *bucket.key();
        let id = bucket.get_mut().pop().expect("buckets are non-empty");
        if bucket.get().is_empty() {
            bucket.remove();
        }
        let key = nodes[id].key.clone();
        if best.get(&key) != Some(&(level, swaps)) {
            continue;
        }
        if key.1 == search.done {
            let mut moves = Vec::new();
            let mut cur = id;
            while let Some((parent, op)) = nodes[cur].parent {
                moves.push(op);
                cur = parent;
            }
            moves.reverse();
            return Ok(OracleSolution {
                intercore: level,
                swaps,
                states: best.len(),
                schedule: search.witness(initial, &moves),
            });
        }
        expanded += 1;
        if expanded.is_multiple_of(256) && started.elapsed() > limits.time_budget {
            return Err(OracleError::Timeout {
                bound: (level, swaps),
                states: best.len(),
            });
        }
        let layout = search.layout(&key.0);
        for op in search.moves(&layout, key.1) {
            let cost = if op.is_intercore() {
                (level + 1, swaps)
            } else {
                (level, swaps + 1)
            };
            if cost.0 + cost.1 > limits.max_ops {
                continue;
            }
            let Some(next) = search.successor(&layout, key.1, &op) else {
                continue;
            };
            match best.entry(next.clone()) {
                Entry::Occupied(mut e) => {
                    if cost >= *e.get() {
                        continue;
                    }
                    e.insert(cost);
                }
                Entry::Vacant(e) => {
                    e.insert(cost);
                }
            }
            let child = nodes.len();
            nodes.push(Node {
                key: next,
                parent: Some((id, op)),
            });
            open.entry(cost).or_default().push(child);
        }
    }
    Err(OracleError::OpLimit {
        max_ops: limits.max_ops,
    })
}
