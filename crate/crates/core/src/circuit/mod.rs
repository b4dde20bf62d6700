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

//! Circuit intermediate representation.
//!
//! Only two-qubit gates become DAG nodes. Single-qubit gates never block
//! routing: they are attached to the closest preceding two-qubit gate on the
//! same qubit (or to the prologue when no such gate exists) and re-emitted
//! when their host gate executes.

mod qasm;

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use qasm::parse_qasm;

pub type GateId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported gate `{name}` on {arity} qubits at {line}:{column}")]
    UnsupportedGate {
        name: String,
        arity: usize,
        line: usize,
        column: usize,
    },
    #[error("invalid circuit: {0}")]
    Invalid(String),
    #[error("gate {0} is not in the front layer")]
    NotInFront(GateId),
}

/// Input format accepted by [`parse_circuit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircuitFormat {
    Qasm,
    GateList,
}

/// A single-qubit operation riding along with the DAG.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingleQubitGate {
    pub kind: String,
    pub qubit: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub id: GateId,
    pub kind: String,
    pub qubits: [usize; 2],
    pub predecessors: Vec<GateId>,
    pub successors: Vec<GateId>,
    /// Single-qubit gates that follow this gate in program order.
    pub annotations: Vec<SingleQubitGate>,
}

impl Gate {
    pub fn acts_on(&self, qubit: usize) -> bool {
        self.qubits[0] == qubit || self.qubits[1] == qubit
    }
}

/// Dependency DAG over two-qubit gates together with its execution state.
#[derive(Debug, Clone)]
pub struct CircuitDag {
    num_qubits: usize,
    gates: Vec<Gate>,
    prologue: Vec<SingleQubitGate>,
    executed: Vec<bool>,
    pending: Vec<usize>,
    front: BTreeSet<GateId>,
    remaining: usize,
}

/// Accumulates gates in program order and produces a [`CircuitDag`].
#[derive(Debug, Clone, Default)]
pub struct CircuitBuilder {
    num_qubits: usize,
    gates: Vec<Gate>,
    prologue: Vec<SingleQubitGate>,
    last_on_qubit: Vec<Option<GateId>>,
}

impl CircuitBuilder {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
            prologue: Vec::new(),
            last_on_qubit: vec![None; num_qubits],
        }
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), CircuitError> {
        if qubit >= self.num_qubits {
            return Err(CircuitError::Invalid(format!(
                "qubit {qubit} out of range for a {}-qubit circuit",
                self.num_qubits
            )));
        }
        Ok(())
    }

    pub fn single(&mut self, kind: &str, qubit: usize) -> Result<&mut Self, CircuitError> {
        self.check_qubit(qubit)?;
        let gate = SingleQubitGate {
            kind: kind.to_string(),
            qubit,
        };
        match self.last_on_qubit[qubit] {
            Some(host) => self.gates[host].annotations.push(gate),
            None => self.prologue.push(gate),
        }
        Ok(self)
    }

    pub fn two(&mut self, kind: &str, a: usize, b: usize) -> Result<&mut Self, CircuitError> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(CircuitError::Invalid(format!(
                "two-qubit gate `{kind}` repeats qubit {a}"
            )));
        }
        let id = self.gates.len();
        let mut predecessors: Vec<GateId> = [a, b]
            .iter()
            .filter_map(|&q| self.last_on_qubit[q])
            .collect();
        predecessors.sort_unstable();
        predecessors.dedup();
        for &p in &predecessors {
            self.gates[p].successors.push(id);
        }
        self.gates.push(Gate {
            id,
            kind: kind.to_string(),
            qubits: [a, b],
            predecessors,
            successors: Vec::new(),
            annotations: Vec::new(),
        });
        self.last_on_qubit[a] = Some(id);
        self.last_on_qubit[b] = Some(id);
        Ok(self)
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.two("cx", control, target)
            .expect("cx arguments must be distinct in-range qubits")
    }

    pub fn build(self) -> CircuitDag {
        CircuitDag::from_parts(self.num_qubits, self.gates, self.prologue)
    }
}

impl CircuitDag {
    fn from_parts(num_qubits: usize, gates: Vec<Gate>, prologue: Vec<SingleQubitGate>) -> Self {
        let mut dag = Self {
            num_qubits,
            executed: vec![false; gates.len()],
            pending: Vec::new(),
            front: BTreeSet::new(),
            remaining: gates.len(),
            gates,
            prologue,
        };
        dag.reset();
        dag
    }

    pub fn empty(num_qubits: usize) -> Self {
        CircuitBuilder::new(num_qubits).build()
    }

    /// Restores the unexecuted state.
    pub fn reset(&mut self) {
        self.executed.iter_mut().for_each(|e| *e = false);
        self.pending = self.gates.iter().map(|g| g.predecessors.len()).collect();
        self.front = self
            .gates
            .iter()
            .filter(|g| g.predecessors.is_empty())
            .map(|g| g.id)
            .collect();
        self.remaining = self.gates.len();
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id]
    }

    pub fn prologue(&self) -> &[SingleQubitGate] {
        &self.prologue
    }

    pub fn num_single_qubit_gates(&self) -> usize {
        self.prologue.len()
            + self
                .gates
                .iter()
                .map(|g| g.annotations.len())
                .sum::<usize>()
    }

    /// Gates whose predecessors have all executed, in ascending id order.
    pub fn front(&self) -> &BTreeSet<GateId> {
        &self.front
    }

    pub fn is_executed(&self, id: GateId) -> bool {
        self.executed[id]
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn is_done(&self) -> bool {
        self.remaining == 0
    }

    /// Marks a front gate as executed and returns the successors it enabled.
    pub fn execute_gate(&mut self, id: GateId) -> Result<Vec<GateId>, CircuitError> {
        if !self.front.remove(&id) {
            return Err(CircuitError::NotInFront(id));
        }
        self.executed[id] = true;
        self.remaining -= 1;
        let mut enabled = Vec::new();
        for &s in &self.gates[id].successors {
            self.pending[s] -= 1;
            if self.pending[s] == 0 {
                self.front.insert(s);
                enabled.push(s);
            }
        }
        enabled.sort_unstable();
        Ok(enabled)
    }

    /// Up to `size` unexecuted gates outside the front, in breadth-first
    /// order starting from the successors of the front gates.
    pub fn extended_set(&self, size: usize) -> Vec<GateId> {
        let mut out = Vec::new();
        if size == 0 {
            return out;
        }
        let mut seen = vec![false; self.gates.len()];
        let mut queue = VecDeque::new();
        for &f in &self.front {
            seen[f] = true;
        }
        for &f in &self.front {
            for &s in &self.gates[f].successors {
                if !seen[s] {
                    seen[s] = true;
                    queue.push_back(s);
                }
            }
        }
        while let Some(g) = queue.pop_front() {
            out.push(g);
            if out.len() == size {
                break;
            }
            for &s in &self.gates[g].successors {
                if !seen[s] {
                    seen[s] = true;
                    queue.push_back(s);
                }
            }
        }
        out
    }

    /// Returns the circuit with every dependency edge inverted, in a fresh
    /// unexecuted state. Gate ids and qubits are preserved.
    pub fn reverse(&self) -> CircuitDag {
        let gates = self
            .gates
            .iter()
            .map(|g| Gate {
                id: g.id,
                kind: g.kind.clone(),
                qubits: g.qubits,
                predecessors: g.successors.clone(),
                successors: g.predecessors.clone(),
                annotations: g.annotations.clone(),
            })
            .collect();
        CircuitDag::from_parts(self.num_qubits, gates, self.prologue.clone())
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct GateListEntry {
    kind: String,
    qubits: Vec<usize>,
}

#[derive(Debug, Deserialize, Serialize)]
struct GateList {
    num_qubits: usize,
    gates: Vec<GateListEntry>,
}

/// Parses a gate-list JSON document:
/// `{"num_qubits": n, "gates": [{"kind": "cx", "qubits": [a, b]}, ...]}`.
pub fn parse_gate_list(text: &str) -> Result<CircuitDag, CircuitError> {
    let list: GateList = serde_json::from_str(text).map_err(|e| CircuitError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut builder = CircuitBuilder::new(list.num_qubits);
    for (i, entry) in list.gates.iter().enumerate() {
        match entry.qubits.as_slice() {
            [q] => {
                builder.single(&entry.kind, *q)?;
            }
            [a, b] => {
                builder.two(&entry.kind, *a, *b)?;
            }
            qs => {
                return Err(CircuitError::UnsupportedGate {
                    name: entry.kind.clone(),
                    arity: qs.len(),
                    line: 0,
                    column: i,
                })
            }
        }
    }
    Ok(builder.build())
}

/// Serializes the two-qubit gates and annotations back into gate-list JSON,
/// in an order that reproduces the same DAG when parsed.
pub fn to_gate_list(dag: &CircuitDag) -> String {
    let mut gates: Vec<GateListEntry> = dag
        .prologue
        .iter()
        .map(|s| GateListEntry {
            kind: s.kind.clone(),
            qubits: vec![s.qubit],
        })
        .collect();
    for g in &dag.gates {
        gates.push(GateListEntry {
            kind: g.kind.clone(),
            qubits: g.qubits.to_vec(),
        });
        gates.extend(g.annotations.iter().map(|s| GateListEntry {
            kind: s.kind.clone(),
            qubits: vec![s.qubit],
        }));
    }
    serde_json::to_string(&GateList {
        num_qubits: dag.num_qubits,
        gates,
    })
    .expect("gate list serialization cannot fail")
}

pub fn parse_circuit(text: &str, format: CircuitFormat) -> Result<CircuitDag, CircuitError> {
    match format {
        CircuitFormat::Qasm => parse_qasm(text),
        CircuitFormat::GateList => parse_gate_list(text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> CircuitDag {
        let mut b = CircuitBuilder::new(4);
        b.cx(0, 1).cx(1, 2).cx(0, 3);
        b.build()
    }

    fn front_vec(dag: &CircuitDag) -> Vec<GateId> {
        dag.front().iter().copied().collect()
    }

    #[test]
    fn empty_circuit_has_no_front() {
        let dag = CircuitDag::empty(4);
        assert_eq!(dag.num_gates(), 0);
        assert!(dag.front().is_empty());
        assert!(dag.is_done());
    }

    #[test]
    fn chain_front_and_execution() {
        let mut dag = chain();
        assert_eq!(front_vec(&dag), vec![0]);
        assert_eq!(dag.execute_gate(0).unwrap(), vec![1, 2]);
        assert_eq!(front_vec(&dag), vec![1, 2]);
        assert_eq!(dag.execute_gate(0), Err(CircuitError::NotInFront(0)));
        assert!(dag.execute_gate(1).unwrap().is_empty());
        assert!(dag.execute_gate(2).unwrap().is_empty());
        assert!(dag.front().is_empty());
        assert!(dag.is_done());
    }

    #[test]
    fn independent_gate_execution_shrinks_front() {
        let mut b = CircuitBuilder::new(4);
        b.cx(0, 1).cx(2, 3);
        let mut dag = b.build();
        assert_eq!(dag.front().len(), 2);
        assert!(dag.execute_gate(1).unwrap().is_empty());
        assert_eq!(front_vec(&dag), vec![0]);
    }

    #[test]
    fn extended_set_cases() {
        let dag = chain();
        assert!(dag.extended_set(0).is_empty());
        assert_eq!(dag.extended_set(1), vec![1]);
        assert_eq!(dag.extended_set(20), vec![1, 2]);

        let mut b = CircuitBuilder::new(3);
        for _ in 0..6 {
            b.cx(0, 1);
        }
        let dag = b.build();
        assert_eq!(dag.extended_set(20), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn reverse_swaps_sources_and_sinks() {
        let dag = chain();
        let rev = dag.reverse();
        assert_eq!(front_vec(&rev), vec![1, 2]);
        let back = rev.reverse();
        assert_eq!(front_vec(&back), front_vec(&dag));
        for (a, b) in dag.gates().iter().zip(back.gates()) {
            assert_eq!(a.predecessors, b.predecessors);
            assert_eq!(a.successors, b.successors);
        }
        assert_eq!(CircuitDag::empty(3).reverse().num_gates(), 0);
    }

    #[test]
    fn single_qubit_gates_attach_to_preceding_gate() {
        let mut b = CircuitBuilder::new(2);
        b.single("h", 0).unwrap();
        b.cx(0, 1);
        b.single("x", 1).unwrap();
        let dag = b.build();
        assert_eq!(dag.prologue().len(), 1);
        assert_eq!(dag.gate(0).annotations.len(), 1);
        assert_eq!(dag.num_single_qubit_gates(), 2);
    }

    #[test]
    fn gate_list_round_trip() {
        let text = r#"{"num_qubits": 3, "gates": [
            {"kind": "h", "qubits": [0]},
            {"kind": "cx", "qubits": [0, 1]},
            {"kind": "rz", "qubits": [1]},
            {"kind": "cz", "qubits": [1, 2]}]}"#;
        let dag = parse_gate_list(text).unwrap();
        assert_eq!(dag.num_gates(), 2);
        assert_eq!(dag.gate(1).kind, "cz");
        assert_eq!(dag.gate(1).predecessors, vec![0]);
        let again = parse_gate_list(&to_gate_list(&dag)).unwrap();
        assert_eq!(again.gates(), dag.gates());
        assert_eq!(again.prologue(), dag.prologue());
    }

    #[test]
    fn gate_list_rejects_three_qubit_gates() {
        let text = r#"{"num_qubits": 3, "gates": [{"kind": "ccx", "qubits": [0, 1, 2]}]}"#;
        assert!(matches!(
            parse_gate_list(text),
            Err(CircuitError::UnsupportedGate { arity: 3, .. })
        ));
    }
}
