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

//! Logical-to-physical assignment and the three movement primitives.

use thiserror::Error;

use crate::architecture::Architecture;
use crate::circuit::{Gate, GateId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("logical qubit {logical} assigned to nonexistent physical qubit {physical}")]
    UnknownPhysical { logical: usize, physical: usize },
    #[error("physical qubit {0} hosts more than one logical qubit")]
    DoubleAssignment(usize),
    #[error("core {0} would have no free physical qubit")]
    FullCore(usize),
    #[error("{0} logical qubits cannot fit while leaving a free qubit in each core")]
    Capacity(usize),
    #[error("infeasible operation {0:?}")]
    Infeasible(CandidateOp),
}

/// A movement operation considered by the router.
///
/// Variant order defines the deterministic candidate ordering: swaps, then
/// teledata, then telegates, each by ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CandidateOp {
    /// Exchange the occupants of two coupled physical qubits, `a < b`.
    Swap { a: usize, b: usize },
    /// Teleport `logical` from `src_data` (coupled to `src_comm`) onto `dst_comm`.
    Teledata {
        logical: usize,
        src_data: usize,
        src_comm: usize,
        dst_comm: usize,
    },
    /// Execute `gate` remotely; `data[i]` hosts the gate's i-th qubit and is
    /// coupled to `comms[i]`, and `comms` is a link.
    Telegate {
        gate: GateId,
        data: [usize; 2],
        comms: [usize; 2],
    },
}

impl CandidateOp {
    pub fn swap(a: usize, b: usize) -> Self {
        CandidateOp::Swap {
            a: a.min(b),
            b: a.max(b),
        }
    }

    /// Physical qubits involved in the operation.
    pub fn touched(&self) -> Vec<usize> {
        match *self {
            CandidateOp::Swap { a, b } => vec![a, b],
            CandidateOp::Teledata {
                src_data,
                src_comm,
                dst_comm,
                ..
            } => vec![src_data, src_comm, dst_comm],
            CandidateOp::Telegate { data, comms, .. } => vec![data[0], data[1], comms[0], comms[1]],
        }
    }

    pub fn is_intercore(&self) -> bool {
        !matches!(self, CandidateOp::Swap { .. })
    }
}

/// Bijective assignment of logical qubits onto physical qubits plus the
/// per-qubit usage penalty used for decay.
#[derive(Debug, Clone)]
pub struct Layout {
    phys_of: Vec<usize>,
    log_of: Vec<Option<usize>>,
    free_count: Vec<usize>,
    usage: Vec<f64>,
}

impl PartialEq for Layout {
    /// Layouts compare by assignment only; usage is scoring state.
    fn eq(&self, other: &Self) -> bool {
        self.phys_of == other.phys_of
    }
}

impl Eq for Layout {}

impl Layout {
    /// Builds a layout from `phys_of[logical] = physical`.
    pub fn new(arch: &Architecture, phys_of: Vec<usize>) -> Result<Self, LayoutError> {
        let n = arch.num_qubits();
        let mut log_of = vec![None; n];
        let mut free_count: Vec<usize> = (0..arch.num_cores())
            .map(|c| arch.core_qubits(c).len())
            .collect();
        for (logical, &physical) in phys_of.iter().enumerate() {
            if physical >= n {
                return Err(LayoutError::UnknownPhysical { logical, physical });
            }
            if log_of[physical].is_some() {
                return Err(LayoutError::DoubleAssignment(physical));
            }
            log_of[physical] = Some(logical);
            free_count[arch.core_of(physical)] -= 1;
        }
        if let Some(core) = free_count.iter().position(|&f| f == 0) {
            return Err(LayoutError::FullCore(core));
        }
        Ok(Self {
            phys_of,
            log_of,
            free_count,
            usage: vec![1.0; n],
        })
    }

    pub fn num_logical(&self) -> usize {
        self.phys_of.len()
    }

    pub fn phys(&self, logical: usize) -> usize {
        self.phys_of[logical]
    }

    pub fn logical_at(&self, physical: usize) -> Option<usize> {
        self.log_of[physical]
    }

    pub fn is_free(&self, physical: usize) -> bool {
        self.log_of[physical].is_none()
    }

    pub fn core_of_logical(&self, arch: &Architecture, logical: usize) -> usize {
        arch.core_of(self.phys_of[logical])
    }

    pub fn free_count(&self, core: usize) -> usize {
        self.free_count[core]
    }

    /// `phys_of` as a slice indexed by logical qubit.
    pub fn assignment(&self) -> &[usize] {
        &self.phys_of
    }

    pub fn usage(&self, physical: usize) -> f64 {
        self.usage[physical]
    }

    pub fn max_usage(&self, qubits: &[usize]) -> f64 {
        qubits.iter().map(|&p| self.usage[p]).fold(1.0, f64::max)
    }

    pub fn bump_usage(&mut self, qubits: &[usize], delta: f64) {
        for &p in qubits {
            self.usage[p] += delta;
        }
    }

    pub fn reset_usage(&mut self) {
        self.usage.iter_mut().for_each(|u| *u = 1.0);
    }

    /// Applies `op` in place after checking feasibility.
    pub fn apply(&mut self, arch: &Architecture, op: &CandidateOp) -> Result<(), LayoutError> {
        match *op {
            CandidateOp::Swap { a, b } => {
                if !arch.are_coupled(a, b) || (self.is_free(a) && self.is_free(b)) {
                    return Err(LayoutError::Infeasible(*op));
                }
                let (la, lb) = (self.log_of[a], self.log_of[b]);
                self.log_of[a] = lb;
                self.log_of[b] = la;
                if let Some(l) = la {
                    self.phys_of[l] = b;
                }
                if let Some(l) = lb {
                    self.phys_of[l] = a;
                }
            }
            CandidateOp::Teledata {
                logical,
                src_data,
                src_comm,
                dst_comm,
            } => {
                if self.phys_of.get(logical) != Some(&src_data)
                    || !teleport_feasible(self, arch, logical, (src_comm, dst_comm))
                {
                    return Err(LayoutError::Infeasible(*op));
                }
                self.log_of[src_data] = None;
                self.log_of[dst_comm] = Some(logical);
                self.phys_of[logical] = dst_comm;
                self.free_count[arch.core_of(src_data)] += 1;
                self.free_count[arch.core_of(dst_comm)] -= 1;
                if self.free_count[arch.core_of(dst_comm)] == 0 {
                    return Err(LayoutError::FullCore(arch.core_of(dst_comm)));
                }
            }
            CandidateOp::Telegate { data, comms, .. } => {
                let ok = arch.is_link(comms[0], comms[1])
                    && self.is_free(comms[0])
                    && self.is_free(comms[1])
                    && (0..2).all(|i| {
                        !self.is_free(data[i])
                            && data[i] != comms[i]
                            && arch.are_coupled(data[i], comms[i])
                    });
                if !ok {
                    return Err(LayoutError::Infeasible(*op));
                }
            }
        }
        Ok(())
    }

    /// Value-semantics variant of [`Layout::apply`].
    pub fn applied(&self, arch: &Architecture, op: &CandidateOp) -> Result<Self, LayoutError> {
        let mut next = self.clone();
        next.apply(arch, op)?;
        Ok(next)
    }
}

/// Both qubits in one core on coupled physical qubits.
pub fn is_gate_executable(layout: &Layout, arch: &Architecture, gate: &Gate) -> bool {
    let (a, b) = (layout.phys(gate.qubits[0]), layout.phys(gate.qubits[1]));
    arch.core_of(a) == arch.core_of(b) && arch.are_coupled(a, b)
}

/// Teledata of `logical` over `link = (src_comm, dst_comm)`: both comm
/// qubits free, the qubit coupled to (and not on) `src_comm`, and the
/// destination core keeping a spare free qubit afterwards.
pub fn teleport_feasible(
    layout: &Layout,
    arch: &Architecture,
    logical: usize,
    link: (usize, usize),
) -> bool {
    let (src, dst) = link;
    let p = layout.phys(logical);
    arch.is_link(src, dst)
        && layout.is_free(src)
        && layout.is_free(dst)
        && p != src
        && arch.are_coupled(p, src)
        && layout.free_count(arch.core_of(dst)) >= 2
}

/// Telegate of `gate` over `link`, with the link endpoints matched to the
/// gate's cores in either orientation. Returns the op when feasible.
pub fn telegate_op(
    layout: &Layout,
    arch: &Architecture,
    gate: &Gate,
    link: (usize, usize),
) -> Option<CandidateOp> {
    let data = [layout.phys(gate.qubits[0]), layout.phys(gate.qubits[1])];
    let (c0, c1) = (arch.core_of(data[0]), arch.core_of(data[1]));
    if c0 == c1 || !arch.is_link(link.0, link.1) {
        return None;
    }
    let comms = if arch.core_of(link.0) == c0 && arch.core_of(link.1) == c1 {
        [link.0, link.1]
    } else if arch.core_of(link.1) == c0 && arch.core_of(link.0) == c1 {
        [link.1, link.0]
    } else {
        return None;
    };
    let ok = layout.is_free(comms[0])
        && layout.is_free(comms[1])
        && arch.are_coupled(data[0], comms[0])
        && arch.are_coupled(data[1], comms[1]);
    ok.then_some(CandidateOp::Telegate {
        gate: gate.id,
        data,
        comms,
    })
}

pub fn telegate_feasible(
    layout: &Layout,
    arch: &Architecture,
    gate: &Gate,
    link: (usize, usize),
) -> bool {
    telegate_op(layout, arch, gate, link).is_some()
}

/// Distance from `comm` to the closest free qubit of its core and that
/// qubit (smallest id on ties). `(0, comm)` when `comm` is itself free.
pub fn nearest_free(layout: &Layout, arch: &Architecture, comm: usize) -> Option<(u32, usize)> {
    arch.core_qubits(arch.core_of(comm))
        .iter()
        .filter(|&&q| layout.is_free(q))
        .map(|&q| (arch.hops(comm, q), q))
        .min()
}
