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

//! Independent schedule checker.
//!
//! Replays a schedule on its own occupancy arrays and re-derives every
//! legality condition from the architecture, without using the router's
//! layout or feasibility code.

use std::fmt;

use serde::Serialize;

use crate::architecture::Architecture;
use crate::circuit::{CircuitDag, GateId};
use crate::schedule::{OpKind, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Malformed layout or out-of-range qubit.
    Layout,
    /// Two-qubit operation on uncoupled qubits.
    Adjacency,
    /// Gate executed before its predecessors, twice, or not at all.
    Ordering,
    /// Operation references a qubit not holding the stated logical qubit.
    Placement,
    Teledata,
    Telegate,
    /// A core was left with no free physical qubit.
    Capacity,
    SingleQubit,
    FinalLayout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Offending op, `None` for whole-schedule checks.
    pub seq: Option<usize>,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seq {
            Some(seq) => write!(f, "op {seq}: {:?}: {}", self.kind, self.message),
            None => write!(f, "{:?}: {}", self.kind, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Event {
    Single(String),
    Gate(GateId),
}

struct Replay<'a> {
    arch: &'a Architecture,
    dag: &'a CircuitDag,
    phys: Vec<usize>,
    occupant: Vec<Option<usize>>,
    executed: Vec<bool>,
    expected: Vec<Vec<Event>>,
    cursor: Vec<usize>,
    report: VerificationReport,
    seq: Option<usize>,
}

impl<'a> Replay<'a> {
    fn flag(&mut self, kind: ViolationKind, message: String) {
        self.report.violations.push(Violation {
            seq: self.seq,
            kind,
            message,
        });
    }

    fn in_range(&mut self, qubits: &[usize]) -> bool {
        let n = self.arch.num_qubits();
        if let Some(&q) = qubits.iter().find(|&&q| q >= n) {
            self.flag(
                ViolationKind::Layout,
                format!("physical qubit {q} out of range"),
            );
            return false;
        }
        true
    }

    fn free_in_core(&self, core: usize) -> usize {
        self.arch
            .core_qubits(core)
            .iter()
            .filter(|&&p| self.occupant[p].is_none())
            .count()
    }

    fn check_capacity(&mut self) {
        for core in 0..self.arch.num_cores() {
            if self.free_in_core(core) == 0 {
                self.flag(
                    ViolationKind::Capacity,
                    format!("core {core} has no free qubit"),
                );
            }
        }
    }

    /// Front membership recomputed from the predecessor lists.
    fn check_ready(&mut self, gate: GateId) -> bool {
        if gate >= self.dag.num_gates() {
            self.flag(ViolationKind::Ordering, format!("unknown gate {gate}"));
            return false;
        }
        if self.executed[gate] {
            self.flag(
                ViolationKind::Ordering,
                format!("gate {gate} executed twice"),
            );
            return false;
        }
        let pending: Vec<GateId> = self
            .dag
            .gate(gate)
            .predecessors
            .iter()
            .copied()
            .filter(|&p| !self.executed[p])
            .collect();
        if !pending.is_empty() {
            self.flag(
                ViolationKind::Ordering,
                format!("gate {gate} executed before predecessors {pending:?}"),
            );
        }
        true
    }

    fn check_placement(&mut self, gate: GateId, qubits: [usize; 2]) {
        let logical = self.dag.gate(gate).qubits;
        for i in 0..2 {
            if self.phys[logical[i]] != qubits[i] {
                self.flag(
                    ViolationKind::Placement,
                    format!(
                        "gate {gate} expects logical {} on {} but it is on {}",
                        logical[i], qubits[i], self.phys[logical[i]]
                    ),
                );
            }
        }
    }

    fn advance(&mut self, logical: usize, event: Event) {
        let at = self.cursor[logical];
        if self.expected[logical].get(at) == Some(&event) {
            self.cursor[logical] += 1;
            return;
        }
        let kind = match event {
            Event::Single(_) => ViolationKind::SingleQubit,
            Event::Gate(_) => ViolationKind::Ordering,
        };
        self.flag(
            kind,
            format!(
                "logical {logical} expected {:?} but got {event:?}",
                self.expected[logical].get(at)
            ),
        );
    }

    fn execute(&mut self, gate: GateId) {
        self.executed[gate] = true;
        for q in self.dag.gate(gate).qubits {
            self.advance(q, Event::Gate(gate));
        }
    }

    fn op(&mut self, kind: &OpKind) {
        match kind {
            OpKind::Single {
                name,
                logical,
                qubit,
            } => {
                if *logical >= self.phys.len() {
                    self.flag(
                        ViolationKind::SingleQubit,
                        format!("unknown logical {logical}"),
                    );
                    return;
                }
                if self.phys[*logical] != *qubit {
                    self.flag(
                        ViolationKind::Placement,
                        format!("logical {logical} is not on {qubit}"),
                    );
                }
                self.advance(*logical, Event::Single(name.clone()));
            }
            OpKind::LocalGate { gate, qubits } => {
                if !self.in_range(qubits) || !self.check_ready(*gate) {
                    return;
                }
                self.check_placement(*gate, *qubits);
                if !self.arch.are_coupled(qubits[0], qubits[1]) {
                    self.flag(
                        ViolationKind::Adjacency,
                        format!("gate {gate} on uncoupled {} and {}", qubits[0], qubits[1]),
                    );
                }
                self.execute(*gate);
            }
            OpKind::Swap { qubits: [a, b] } => {
                if !self.in_range(&[*a, *b]) {
                    return;
                }
                if !self.arch.are_coupled(*a, *b) {
                    self.flag(
                        ViolationKind::Adjacency,
                        format!("swap on uncoupled {a} and {b}"),
                    );
                }
                if self.occupant[*a].is_none() && self.occupant[*b].is_none() {
                    self.flag(
                        ViolationKind::Layout,
                        format!("swap of two free qubits {a} and {b}"),
                    );
                }
                let (x, y) = (self.occupant[*a], self.occupant[*b]);
                self.occupant[*a] = y;
                self.occupant[*b] = x;
                if let Some(l) = x {
                    self.phys[l] = *b;
                }
                if let Some(l) = y {
                    self.phys[l] = *a;
                }
            }
            OpKind::Teledata {
                logical,
                src_data,
                src_comm,
                dst_comm,
            } => {
                if !self.in_range(&[*src_data, *src_comm, *dst_comm]) {
                    return;
                }
                if *logical >= self.phys.len() || self.phys[*logical] != *src_data {
                    self.flag(
                        ViolationKind::Placement,
                        format!("logical {logical} is not on {src_data}"),
                    );
                    return;
                }
                let mut bad = Vec::new();
                if !self.arch.links().contains(&(*src_comm, *dst_comm))
                    && !self.arch.links().contains(&(*dst_comm, *src_comm))
                {
                    bad.push(format!("{src_comm} and {dst_comm} are not linked"));
                }
                for c in [src_comm, dst_comm] {
                    if self.occupant[*c].is_some() {
                        bad.push(format!("comm qubit {c} is occupied"));
                    }
                }
                if src_data == src_comm || !self.arch.are_coupled(*src_data, *src_comm) {
                    bad.push(format!("{src_data} is not coupled to {src_comm}"));
                }
                let dst_core = self.arch.core_of(*dst_comm);
                if self.free_in_core(dst_core) < 2 {
                    bad.push(format!("destination core {dst_core} is full"));
                }
                for message in bad {
                    self.flag(ViolationKind::Teledata, message);
                }
                self.occupant[*src_data] = None;
                self.occupant[*dst_comm] = Some(*logical);
                self.phys[*logical] = *dst_comm;
            }
            OpKind::Telegate {
                gate,
                qubits,
                comms,
            } => {
                if !self.in_range(qubits) || !self.in_range(comms) || !self.check_ready(*gate) {
                    return;
                }
                self.check_placement(*gate, *qubits);
                let mut bad = Vec::new();
                if !self.arch.links().contains(&(comms[0], comms[1]))
                    && !self.arch.links().contains(&(comms[1], comms[0]))
                {
                    bad.push(format!("{} and {} are not linked", comms[0], comms[1]));
                }
                for i in 0..2 {
                    if self.occupant[comms[i]].is_some() {
                        bad.push(format!("comm qubit {} is occupied", comms[i]));
                    }
                    if !self.arch.are_coupled(qubits[i], comms[i]) {
                        bad.push(format!("{} is not coupled to {}", qubits[i], comms[i]));
                    }
                }
                for message in bad {
                    self.flag(ViolationKind::Telegate, message);
                }
                self.execute(*gate);
            }
        }
    }
}

/// Expected per-logical-qubit event sequence in program order.
fn expected_events(dag: &CircuitDag) -> Vec<Vec<Event>> {
    let mut events = vec![Vec::new(); dag.num_qubits()];
    for s in dag.prologue() {
        events[s.qubit].push(Event::Single(s.kind.clone()));
    }
    for g in dag.gates() {
        for q in g.qubits {
            events[q].push(Event::Gate(g.id));
        }
        for s in &g.annotations {
            events[s.qubit].push(Event::Single(s.kind.clone()));
        }
    }
    events
}

/// Replays `schedule` against `dag` and `arch`, collecting every violation.
pub fn verify(dag: &CircuitDag, arch: &Architecture, schedule: &Schedule) -> VerificationReport {
    let n = arch.num_qubits();
    let mut replay = Replay {
        arch,
        dag,
        phys: schedule.initial_layout.clone(),
        occupant: vec![None; n],
        executed: vec![false; dag.num_gates()],
        expected: expected_events(dag),
        cursor: vec![0; dag.num_qubits()],
        report: VerificationReport::default(),
        seq: None,
    };
    if schedule.num_physical != n {
        replay.flag(
            ViolationKind::Layout,
            format!(
                "schedule is for {} physical qubits, device has {n}",
                schedule.num_physical
            ),
        );
        return replay.report;
    }
    if replay.phys.len() != dag.num_qubits() {
        replay.flag(
            ViolationKind::Layout,
            format!(
                "initial layout maps {} logical qubits, circuit has {}",
                replay.phys.len(),
                dag.num_qubits()
            ),
        );
        return replay.report;
    }
    for (l, &p) in schedule.initial_layout.iter().enumerate() {
        if p >= n {
            replay.flag(
                ViolationKind::Layout,
                format!("logical {l} on missing qubit {p}"),
            );
            return replay.report;
        }
        if let Some(other) = replay.occupant[p] {
            replay.flag(
                ViolationKind::Layout,
                format!("logical {other} and {l} share physical {p}"),
            );
            return replay.report;
        }
        replay.occupant[p] = Some(l);
    }
    replay.check_capacity();

    for op in &schedule.ops {
        replay.seq = Some(op.seq);
        replay.op(&op.kind);
        replay.check_capacity();
    }
    replay.seq = None;

    let missing: Vec<GateId> = (0..dag.num_gates())
        .filter(|&g| !replay.executed[g])
        .collect();
    if !missing.is_empty() {
        replay.flag(
            ViolationKind::Ordering,
            format!("gates never executed: {missing:?}"),
        );
    }
    for q in 0..dag.num_qubits() {
        let rest = &replay.expected[q][replay.cursor[q]..];
        if rest.iter().any(|e| matches!(e, Event::Single(_))) {
            replay.flag(
                ViolationKind::SingleQubit,
                format!("logical {q} is missing single-qubit gates"),
            );
        }
    }
    if replay.phys != schedule.final_layout {
        replay.flag(
            ViolationKind::FinalLayout,
            format!(
                "replayed layout {:?} differs from reported {:?}",
                replay.phys, schedule.final_layout
            ),
        );
    }
    replay.report
}
