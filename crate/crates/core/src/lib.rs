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

//! Layout synthesis for multi-core quantum architectures whose cores are
//! joined by teleportation links.
//!
//! The router extends SABRE-style swap search with two inter-core
//! primitives: *teledata* (teleport a logical qubit onto a linked
//! communication qubit) and *telegate* (execute a CX across a link without
//! moving either operand).

pub mod architecture;
pub mod baseline;
pub mod benchmarks;
pub mod circuit;
pub mod energy;
pub mod initial;
pub mod layout;
pub mod oracle;
pub mod router;
pub mod schedule;
pub mod verify;

pub use architecture::{Architecture, ArchitectureError, DistanceTable, GridSpec};
pub use baseline::run_greedy;
pub use circuit::{CircuitDag, CircuitError, Gate, GateId};
pub use energy::{EnergyError, RouterParams};
pub use initial::{initial_layout, optimize_initial};
pub use layout::{CandidateOp, Layout, LayoutError};
pub use oracle::{solve_exact, OracleError, OracleLimits, OracleSolution};
pub use router::{run, run_from, Deadlock, DeadlockReason, RouteError, RoutingResult};
pub use schedule::{CompiledOp, Metrics, OpKind, Schedule, ScheduleError};
pub use verify::{verify, VerificationReport, Violation, ViolationKind};
