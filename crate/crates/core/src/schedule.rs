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

//! Compiled operation streams, metrics and serialization.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::architecture::Architecture;
use crate::circuit::{CircuitDag, GateId};
use crate::layout::{CandidateOp, Layout};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("malformed schedule: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("unsupported schedule document: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OpKind {
    /// Single-qubit gate from the input circuit.
    Single {
        name: String,
        logical: usize,
        qubit: usize,
    },
    /// Two-qubit gate executed on coupled physical qubits.
    LocalGate {
        gate: GateId,
        qubits: [usize; 2],
    },
    Swap {
        qubits: [usize; 2],
    },
    Teledata {
        logical: usize,
        src_data: usize,
        src_comm: usize,
        dst_comm: usize,
    },
    /// Remote execution of `gate`; `qubits[i]` is coupled to `comms[i]`.
    Telegate {
        gate: GateId,
        qubits: [usize; 2],
        comms: [usize; 2],
    },
}

impl OpKind {
    /// Physical qubits occupied while the operation runs.
    pub fn touched(&self) -> Vec<usize> {
        match self {
            OpKind::Single { qubit, .. } => vec![*qubit],
            OpKind::LocalGate { qubits, .. } | OpKind::Swap { qubits } => qubits.to_vec(),
            OpKind::Teledata {
                src_data,
                src_comm,
                dst_comm,
                ..
            } => vec![*src_data, *src_comm, *dst_comm],
            OpKind::Telegate { qubits, comms, .. } => {
                vec![qubits[0], qubits[1], comms[0], comms[1]]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledOp {
    pub seq: usize,
    #[serde(flatten)]
    pub kind: OpKind,
}

/// Per-kind durations for depth accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Durations {
    pub local_gate: u64,
    pub swap: u64,
    pub teledata: u64,
    pub telegate: u64,
    pub single: u64,
    pub include_single: bool,
}

impl Default for Durations {
    fn default() -> Self {
        Self {
            local_gate: 1,
            swap: 1,
            teledata: 1,
            telegate: 1,
            single: 1,
            include_single: false,
        }
    }
}

impl Durations {
    fn of(&self, kind: &OpKind) -> Option<u64> {
        match kind {
            OpKind::Single { .. } => self.include_single.then_some(self.single),
            OpKind::LocalGate { .. } => Some(self.local_gate),
            OpKind::Swap { .. } => Some(self.swap),
            OpKind::Teledata { .. } => Some(self.teledata),
            OpKind::Telegate { .. } => Some(self.telegate),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub swaps: usize,
    pub teledata: usize,
    pub telegate: usize,
    pub intercore_total: usize,
    pub depth: u64,
}

impl Metrics {
    /// Ordering key used to pick the best of several trials.
    pub fn rank(&self) -> (usize, usize, u64) {
        (self.intercore_total, self.swaps, self.depth)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub num_physical: usize,
    /// Physical qubit of each logical qubit before the first operation.
    pub initial_layout: Vec<usize>,
    pub final_layout: Vec<usize>,
    pub ops: Vec<CompiledOp>,
}

impl Schedule {
    pub fn count(&self, pred: impl Fn(&OpKind) -> bool) -> usize {
        self.ops.iter().filter(|op| pred(&op.kind)).count()
    }

    pub fn swaps(&self) -> usize {
        self.count(|k| matches!(k, OpKind::Swap { .. }))
    }

    pub fn teledata(&self) -> usize {
        self.count(|k| matches!(k, OpKind::Teledata { .. }))
    }

    pub fn telegates(&self) -> usize {
        self.count(|k| matches!(k, OpKind::Telegate { .. }))
    }

    pub fn intercore(&self) -> usize {
        self.teledata() + self.telegates()
    }

    pub fn metrics(&self) -> Metrics {
        self.metrics_with(&Durations::default())
    }

    pub fn metrics_with(&self, durations: &Durations) -> Metrics {
        Metrics {
            swaps: self.swaps(),
            teledata: self.teledata(),
            telegate: self.telegates(),
            intercore_total: self.intercore(),
            depth: compute_depth(self, durations),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ScheduleDocument {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            num_physical: self.num_physical,
            metrics: self.metrics(),
            initial_layout: self.initial_layout.clone(),
            final_layout: self.final_layout.clone(),
            ops: self.ops.clone(),
        };
        let mut text =
            serde_json::to_string_pretty(&doc).expect("schedule serialization cannot fail");
        text.push('\n');
        text
    }

    /// Parses a JSON schedule. Stored metrics are ignored; they are always
    /// recomputed from the op stream.
    pub fn from_json(text: &str) -> Result<Self, ScheduleError> {
        let doc: ScheduleDocument = serde_json::from_str(text)?;
        if doc.format != FORMAT_TAG || doc.version != FORMAT_VERSION {
            return Err(ScheduleError::Format(format!(
                "{} v{}",
                doc.format, doc.version
            )));
        }
        Ok(Self {
            num_physical: doc.num_physical,
            initial_layout: doc.initial_layout,
            final_layout: doc.final_layout,
            ops: doc.ops,
        })
    }
}

const FORMAT_TAG: &str = "telesabre-schedule";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleDocument {
    format: String,
    version: u32,
    num_physical: usize,
    metrics: Metrics,
    initial_layout: Vec<usize>,
    final_layout: Vec<usize>,
    ops: Vec<CompiledOp>,
}

/// ASAP makespan: each op starts when all of its physical qubits are idle.
pub fn compute_depth(schedule: &Schedule, durations: &Durations) -> u64 {
    let mut ready = vec![0u64; schedule.num_physical];
    let mut depth = 0;
    for op in &schedule.ops {
        let Some(d) = durations.of(&op.kind) else {
            continue;
        };
        let touched = op.kind.touched();
        let start = touched.iter().map(|&q| ready[q]).max().unwrap_or(0);
        let end = start + d;
        for q in touched {
            ready[q] = end;
        }
        depth = depth.max(end);
    }
    depth
}

/// Incrementally records the operations of a routing run.
#[derive(Debug, Clone)]
pub struct ScheduleBuilder {
    num_physical: usize,
    initial: Vec<usize>,
    ops: Vec<CompiledOp>,
}

impl ScheduleBuilder {
    /// Starts a schedule and emits the circuit's prologue single-qubit gates.
    pub fn new(arch: &Architecture, dag: &CircuitDag, initial: &Layout) -> Self {
        let mut builder = Self {
            num_physical: arch.num_qubits(),
            initial: initial.assignment().to_vec(),
            ops: Vec::new(),
        };
        for s in dag.prologue() {
            builder.push(OpKind::Single {
                name: s.kind.clone(),
                logical: s.qubit,
                qubit: initial.phys(s.qubit),
            });
        }
        builder
    }

    pub fn push(&mut self, kind: OpKind) {
        let seq = self.ops.len();
        self.ops.push(CompiledOp { seq, kind });
    }

    fn annotations(&mut self, dag: &CircuitDag, gate: GateId, layout: &Layout) {
        for s in &dag.gate(gate).annotations {
            self.push(OpKind::Single {
                name: s.kind.clone(),
                logical: s.qubit,
                qubit: layout.phys(s.qubit),
            });
        }
    }

    /// Records a gate executed locally under `layout`.
    pub fn local_gate(&mut self, dag: &CircuitDag, gate: GateId, layout: &Layout) {
        let g = dag.gate(gate);
        self.push(OpKind::LocalGate {
            gate,
            qubits: [layout.phys(g.qubits[0]), layout.phys(g.qubits[1])],
        });
        self.annotations(dag, gate, layout);
    }

    /// Records a committed movement operation; `layout` is the state after it.
    pub fn movement(&mut self, dag: &CircuitDag, op: &CandidateOp, layout: &Layout) {
        match *op {
            CandidateOp::Swap { a, b } => self.push(OpKind::Swap { qubits: [a, b] }),
            CandidateOp::Teledata {
                logical,
                src_data,
                src_comm,
                dst_comm,
            } => self.push(OpKind::Teledata {
                logical,
                src_data,
                src_comm,
                dst_comm,
            }),
            CandidateOp::Telegate { gate, data, comms } => {
                self.push(OpKind::Telegate {
                    gate,
                    qubits: data,
                    comms,
                });
                self.annotations(dag, gate, layout);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn finish(self, final_layout: &Layout) -> Schedule {
        Schedule {
            num_physical: self.num_physical,
            initial_layout: self.initial,
            final_layout: final_layout.assignment().to_vec(),
            ops: self.ops,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Json,
    CsvSummary,
    AnnotatedText,
}

/// Context for the CSV summary row.
#[derive(Debug, Clone, Default)]
pub struct RunInfo {
    pub circuit: String,
    pub arch: String,
    pub seed: u64,
    pub runtime_ms: u128,
}

pub const CSV_COLUMNS: [&str; 9] = [
    "circuit",
    "arch",
    "seed",
    "swaps",
    "teledata",
    "telegate",
    "intercore_total",
    "depth",
    "runtime_ms",
];

/// Writes CSV rows (with header) for a set of runs.
pub fn csv_rows<'a>(
    rows: impl IntoIterator<Item = (&'a RunInfo, Metrics)>,
) -> Result<Vec<u8>, ScheduleError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for (info, m) in rows {
        w.write_record([
            info.circuit.clone(),
            info.arch.clone(),
            info.seed.to_string(),
            m.swaps.to_string(),
            m.teledata.to_string(),
            m.telegate.to_string(),
            m.intercore_total.to_string(),
            m.depth.to_string(),
            info.runtime_ms.to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| ScheduleError::Csv(e.into_error().into()))
}

pub fn emit(
    schedule: &Schedule,
    format: EmitFormat,
    info: &RunInfo,
) -> Result<Vec<u8>, ScheduleError> {
    match format {
        EmitFormat::Json => Ok(schedule.to_json().into_bytes()),
        EmitFormat::CsvSummary => csv_rows([(info, schedule.metrics())]),
        EmitFormat::AnnotatedText => Ok(annotated_text(schedule).into_bytes()),
    }
}

/// Human-readable listing; teleportation protocols are expanded into their
/// entangle / local / measure / correct phases as comments.
pub fn annotated_text(schedule: &Schedule) -> String {
    let m = schedule.metrics();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "// swaps={} teledata={} telegate={} depth={}",
        m.swaps, m.teledata, m.telegate, m.depth
    );
    for op in &schedule.ops {
        let _ = match &op.kind {
            OpKind::Single {
                name,
                logical,
                qubit,
            } => writeln!(out, "{name} p{qubit}; // q{logical}"),
            OpKind::LocalGate { gate, qubits } => {
                writeln!(out, "cx p{}, p{}; // gate {gate}", qubits[0], qubits[1])
            }
            OpKind::Swap { qubits } => writeln!(out, "swap p{}, p{};", qubits[0], qubits[1]),
            OpKind::Teledata {
                logical,
                src_data,
                src_comm,
                dst_comm,
            } => {
                let (d, s, t) = (src_data, src_comm, dst_comm);
                writeln!(out, "teledata q{logical}: p{d} -> p{t} via p{s};")
                    .and_then(|_| writeln!(out, "//   [entangle] bell pair on p{s}, p{t}"))
                    .and_then(|_| writeln!(out, "//   [local]    cx p{d}, p{s}; h p{d}"))
                    .and_then(|_| {
                        writeln!(
                            out,
                            "//   [measure]  measure p{d}, p{s}; send 2 classical bits"
                        )
                    })
                    .and_then(|_| {
                        writeln!(
                            out,
                            "//   [correct]  if (m_p{s}) x p{t}; if (m_p{d}) z p{t}"
                        )
                    })
            }
            OpKind::Telegate {
                gate,
                qubits,
                comms,
            } => {
                let ([a, b], [ca, cb]) = (qubits, comms);
                writeln!(
                    out,
                    "telegate cx p{a}, p{b} via p{ca}, p{cb}; // gate {gate}"
                )
                .and_then(|_| writeln!(out, "//   [entangle] bell pair on p{ca}, p{cb}"))
                .and_then(|_| {
                    writeln!(
                        out,
                        "//   [local]    cx p{a}, p{ca}; cx p{cb}, p{b}; h p{cb}"
                    )
                })
                .and_then(|_| {
                    writeln!(
                        out,
                        "//   [measure]  measure p{ca}, p{cb}; exchange classical bits"
                    )
                })
                .and_then(|_| {
                    writeln!(
                        out,
                        "//   [correct]  if (m_p{ca}) x p{b}; if (m_p{cb}) z p{a}"
                    )
                })
            }
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule(kinds: Vec<OpKind>) -> Schedule {
        Schedule {
            num_physical: 8,
            initial_layout: vec![0, 1, 2],
            final_layout: vec![0, 1, 2],
            ops: kinds
                .into_iter()
                .enumerate()
                .map(|(seq, kind)| CompiledOp { seq, kind })
                .collect(),
        }
    }

    fn local(gate: usize, a: usize, b: usize) -> OpKind {
        OpKind::LocalGate {
            gate,
            qubits: [a, b],
        }
    }

    #[test]
    fn depth_cases() {
        let d = Durations::default();
        assert_eq!(
            compute_depth(&schedule(vec![local(0, 0, 1), local(1, 2, 3)]), &d),
            1
        );
        assert_eq!(
            compute_depth(&schedule(vec![local(0, 0, 1), local(1, 1, 2)]), &d),
            2
        );
        let chain = schedule(vec![OpKind::Swap { qubits: [0, 1] }, local(0, 1, 2)]);
        assert_eq!(compute_depth(&chain, &d), 2);
        assert_eq!(compute_depth(&schedule(vec![]), &d), 0);
    }

    #[test]
    fn depth_durations_and_single_qubit_ops() {
        let s = schedule(vec![
            OpKind::Single {
                name: "h".into(),
                logical: 0,
                qubit: 0,
            },
            OpKind::Teledata {
                logical: 0,
                src_data: 2,
                src_comm: 3,
                dst_comm: 4,
            },
            local(0, 4, 5),
        ]);
        assert_eq!(compute_depth(&s, &Durations::default()), 2);
        let slow = Durations {
            teledata: 3,
            include_single: true,
            ..Durations::default()
        };
        assert_eq!(compute_depth(&s, &slow), 4);
    }

    #[test]
    fn empty_schedule_json() {
        let s = schedule(vec![]);
        let json = s.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["swaps", "teledata", "telegate", "intercore_total", "depth"] {
            assert_eq!(v["metrics"][key], 0);
        }
    }

    #[test]
    fn json_round_trip() {
        let s = schedule(vec![
            OpKind::Swap { qubits: [0, 1] },
            OpKind::Telegate {
                gate: 0,
                qubits: [2, 5],
                comms: [3, 4],
            },
            OpKind::Teledata {
                logical: 1,
                src_data: 2,
                src_comm: 3,
                dst_comm: 4,
            },
        ]);
        let back = Schedule::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.metrics().intercore_total, 2);
        assert!(Schedule::from_json("{\"format\": \"other\"}").is_err());
    }

    #[test]
    fn teledata_text_has_four_phases() {
        let s = schedule(vec![OpKind::Teledata {
            logical: 0,
            src_data: 2,
            src_comm: 3,
            dst_comm: 4,
        }]);
        let text =
            String::from_utf8(emit(&s, EmitFormat::AnnotatedText, &RunInfo::default()).unwrap())
                .unwrap();
        for phase in ["[entangle]", "[local]", "[measure]", "[correct]"] {
            assert!(text.contains(phase), "missing {phase} in\n{text}");
        }
        assert!(text.contains("x p4") && text.contains("z p4"));
    }

    #[test]
    fn csv_summary_row() {
        let s = schedule(vec![OpKind::Swap { qubits: [0, 1] }]);
        let info = RunInfo {
            circuit: "ghz, 8".into(),
            arch: "grid:2x1,2x2,1".into(),
            seed: 7,
            runtime_ms: 3,
        };
        let text = String::from_utf8(emit(&s, EmitFormat::CsvSummary, &info).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "\"ghz, 8\",\"grid:2x1,2x2,1\",7,1,0,0,0,1,3"
        );
    }
}
