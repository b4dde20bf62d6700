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

//! Initial placement of logical qubits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::architecture::Architecture;
use crate::circuit::CircuitDag;
use crate::energy::RouterParams;
use crate::layout::Layout;
use crate::router::{check_instance, run_from, RouteError};

const PLACEMENT_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Core with the most remaining room that can take `need` more qubits.
fn roomiest(room: &[usize], need: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
    let best = *room.iter().filter(|&&r| r >= need).max()?;
    let ties: Vec<usize> = (0..room.len()).filter(|&c| room[c] == best).collect();
    Some(ties[rng.random_range(0..ties.len())])
}

/// Packs interacting qubits into the same core.
///
/// Gates of the first front are visited in id order; both qubits of each go
/// to the core with the most room. Remaining qubits fill cores round-robin.
/// The room of a core is its share of the logical qubits proportional to its
/// capacity, and every core keeps at least one free physical qubit. Within a
/// core, data qubits are used before communication qubits, in seeded random
/// order.
pub fn initial_layout(
    arch: &Architecture,
    dag: &CircuitDag,
    seed: u64,
) -> Result<Layout, RouteError> {
    check_instance(dag, arch, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PLACEMENT_STREAM);
    let n = dag.num_qubits();
    // Each core takes at most its proportional share of the logical qubits so
    // that no core starts full while others have room.
    let capacity: Vec<usize> = (0..arch.num_cores())
        .map(|c| arch.core_qubits(c).len() - 1)
        .collect();
    let total: usize = capacity.iter().sum();
    let mut room: Vec<usize> = capacity
        .iter()
        .map(|&cap| cap.min((n * cap).div_ceil(total.max(1))))
        .collect();
    let mut core_of: Vec<Option<usize>> = vec![None; n];
    fn place(core_of: &mut [Option<usize>], room: &mut [usize], q: usize, c: usize) {
        core_of[q] = Some(c);
        room[c] -= 1;
    }
    let mut fresh = dag.clone();
    fresh.reset();
    // Front gates act on disjoint qubits, so each pair is still unplaced.
    for &g in fresh.front() {
        let [a, b] = dag.gate(g).qubits;
        if let Some(c) = roomiest(&room, 2, &mut rng) {
            place(&mut core_of, &mut room, a, c);
            place(&mut core_of, &mut room, b, c);
        }
    }
    let cores = room.len();
    let mut next = 0;
    for q in 0..n {
        if core_of[q].is_some() {
            continue;
        }
        while room[next % cores] == 0 {
            next += 1;
        }
        place(&mut core_of, &mut room, q, next % cores);
        next += 1;
    }
    let mut slots: Vec<Vec<usize>> = (0..arch.num_cores())
        .map(|c| {
            let (mut data, mut comm): (Vec<usize>, Vec<usize>) =
                arch.core_qubits(c).iter().partition(|&&p| !arch.is_comm(p));
            data.shuffle(&mut rng);
            comm.shuffle(&mut rng);
            data.extend(comm);
            data.reverse();
            data
        })
        .collect();
    let phys_of = core_of
        .iter()
        .map(|c| slots[c.expect("every qubit placed")].pop().expect("room"))
        .collect();
    Ok(Layout::new(arch, phys_of)?)
}

/// Forward then backward routing pass; the backward pass's final layout is
/// the refined initial layout. Falls back to the packed layout when a pass
/// deadlocks.
pub fn optimize_initial(
    arch: &Architecture,
    dag: &CircuitDag,
    params: &RouterParams,
) -> Result<Layout, RouteError> {
    let packed = initial_layout(arch, dag, params.seed)?;
    let forward = match run_from(dag, arch, packed.clone(), params) {
        Ok(r) => r.layout,
        Err(RouteError::Deadlock(_)) => return Ok(packed),
        Err(e) => return Err(e),
    };
    match run_from(&dag.reverse(), arch, forward, params) {
        Ok(r) => Ok(Layout::new(arch, r.layout.assignment().to_vec())?),
        Err(RouteError::Deadlock(_)) => Ok(packed),
        Err(e) => Err(e),
    }
}
