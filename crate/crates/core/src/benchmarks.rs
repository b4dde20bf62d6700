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

//! Benchmark circuit families, decomposed to single-qubit gates and CX.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{CircuitBuilder, CircuitDag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Benchmark {
    Ghz,
    GraphState,
    Qft,
    DraperAdder,
    CuccaroAdder,
    Qaoa,
    Qnn,
    Random,
}

impl Benchmark {
    pub const ALL: [Benchmark; 8] = [
        Benchmark::Ghz,
        Benchmark::GraphState,
        Benchmark::Qft,
        Benchmark::DraperAdder,
        Benchmark::CuccaroAdder,
        Benchmark::Qaoa,
        Benchmark::Qnn,
        Benchmark::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Ghz => "ghz",
            Benchmark::GraphState => "graph_state",
            Benchmark::Qft => "qft",
            Benchmark::DraperAdder => "draper_adder",
            Benchmark::CuccaroAdder => "cuccaro_adder",
            Benchmark::Qaoa => "qaoa",
            Benchmark::Qnn => "qnn",
            Benchmark::Random => "random",
        }
    }

    /// Circuit on `n` logical qubits. `seed` only affects the randomized
    /// families (graph state, random).
    pub fn build(self, n: usize, seed: u64) -> CircuitDag {
        match self {
            Benchmark::Ghz => ghz(n),
            Benchmark::GraphState => graph_state(n, seed),
            Benchmark::Qft => qft(n),
            Benchmark::DraperAdder => draper_adder(n),
            Benchmark::CuccaroAdder => cuccaro_adder(n),
            Benchmark::Qaoa => qaoa(n),
            Benchmark::Qnn => qnn(n),
            Benchmark::Random => random_circuit(n, 4 * n, seed),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| format!("unknown benchmark '{s}'"))
    }
}

fn single(b: &mut CircuitBuilder, kind: &str, q: usize) {
    b.single(kind, q).expect("qubit in range");
}

/// Controlled phase as `rz; cx; rz; cx; rz`.
fn cphase(b: &mut CircuitBuilder, c: usize, t: usize) {
    single(b, "rz", c);
    b.cx(c, t);
    single(b, "rz", t);
    b.cx(c, t);
    single(b, "rz", t);
}

fn swap(b: &mut CircuitBuilder, x: usize, y: usize) {
    b.cx(x, y).cx(y, x).cx(x, y);
}

/// Toffoli with the standard six-CX decomposition.
fn ccx(b: &mut CircuitBuilder, c0: usize, c1: usize, t: usize) {
    single(b, "h", t);
    b.cx(c1, t);
    single(b, "tdg", t);
    b.cx(c0, t);
    single(b, "t", t);
    b.cx(c1, t);
    single(b, "tdg", t);
    b.cx(c0, t);
    single(b, "t", c1);
    single(b, "t", t);
    single(b, "h", t);
    b.cx(c0, c1);
    single(b, "t", c0);
    single(b, "tdg", c1);
    b.cx(c0, c1);
}

pub fn ghz(n: usize) -> CircuitDag {
    let mut b = CircuitBuilder::new(n);
    if n > 0 {
        single(&mut b, "h", 0);
    }
    for q in 1..n {
        b.cx(q - 1, q);
    }
    b.build()
}

/// Ring plus `n / 2` seeded random chords, each edge a CZ (`h; cx; h`).
pub fn graph_state(n: usize, seed: u64) -> CircuitDag {
    let mut b = CircuitBuilder::new(n);
    for q in 0..n {
        single(&mut b, "h", q);
    }
    if n < 2 {
        return b.build();
    }
    let mut edges: Vec<(usize, usize)> = (0..n).map(|q| (q, (q + 1) % n)).collect();
    if n == 2 {
        edges.truncate(1);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chords = 0;
    while n > 3 && chords < n / 2 {
        let x = rng.random_range(0..n);
        let y = rng.random_range(0..n);
        let (x, y) = (x.min(y), x.max(y));
        if y - x > 1 && !(x == 0 && y == n - 1) && !edges.contains(&(x, y)) {
            edges.push((x, y));
            chords += 1;
        }
    }
    for (x, y) in edges {
        single(&mut b, "h", y);
        b.cx(x, y);
        single(&mut b, "h", y);
    }
    b.build()
}

fn qft_on(b: &mut CircuitBuilder, qubits: &[usize], final_swaps: bool) {
    let n = qubits.len();
    for i in 0..n {
        single(b, "h", qubits[i]);
        for j in i + 1..n {
            cphase(b, qubits[j], qubits[i]);
        }
    }
    if final_swaps {
        for i in 0..n / 2 {
            swap(b, qubits[i], qubits[n - 1 - i]);
        }
    }
}

fn iqft_on(b: &mut CircuitBuilder, qubits: &[usize]) {
    let n = qubits.len();
    for i in (0..n).rev() {
        for j in (i + 1..n).rev() {
            cphase(b, qubits[j], qubits[i]);
        }
        single(b, "h", qubits[i]);
    }
}

pub fn qft(n: usize) -> CircuitDag {
    let mut b = CircuitBuilder::new(n);
    let qubits: Vec<usize> = (0..n).collect();
    qft_on(&mut b, &qubits, true);
    b.build()
}

/// QFT adder adding register `a` (first half) into `b` (second half).
pub fn draper_adder(n: usize) -> CircuitDag {
    let m = n / 2;
    let mut b = CircuitBuilder::new(n);
    let target: Vec<usize> = (m..2 * m).collect();
    qft_on(&mut b, &target, false);
    for (i, &t) in target.iter().enumerate() {
        for j in 0..m - i {
            cphase(&mut b, j, t);
        }
    }
    iqft_on(&mut b, &target);
    b.build()
}

/// Ripple-carry adder: carry-in qubit 0, then interleaved `b_i, a_i`, and a
/// carry-out qubit when `n` is even.
pub fn cuccaro_adder(n: usize) -> CircuitDag {
    let mut b = CircuitBuilder::new(n);
    let bits = n.saturating_sub(1) / 2;
    let (bq, aq) = (|i: usize| 1 + 2 * i, |i: usize| 2 + 2 * i);
    let carry = |i: usize| if i == 0 { 0 } else { aq(i - 1) };
    for i in 0..bits {
        // MAJ(c, b, a)
        let (c, bb, a) = (carry(i), bq(i), aq(i));
        b.cx(a, bb).cx(a, c);
        ccx(&mut b, c, bb, a);
    }
    if n.is_multiple_of(2) && bits > 0 {
        b.cx(aq(bits - 1), n - 1);
    }
    for i in (0..bits).rev() {
        // UMA(c, b, a)
        let (c, bb, a) = (carry(i), bq(i), aq(i));
        ccx(&mut b, c, bb, a);
        b.cx(a, c).cx(c, bb);
    }
    b.build()
}

/// One QAOA layer with an all-pairs cost Hamiltonian (`rzz` as `cx; rz; cx`).
pub fn qaoa(n: usize) -> CircuitDag {
    let mut b = CircuitBuilder::new(n);
    for q in 0..n {
        single(&mut b, "h", q);
    }
    for i in 0..n {
        for j in i + 1..n {
            b.cx(i, j);
            single(&mut b, "rz", j);
            b.cx(i, j);
        }
    }
    for q in 0..n {
        single(&mut b, "rx", q);
    }
    b.build()
}

/// Two layers of `ry` rotations followed by a full CX entangler ring.
pub fn qnn(n: usize) -> CircuitDag {
    let mut b = CircuitBuilder::new(n);
    for _ in 0..2 {
        for q in 0..n {
            single(&mut b, "ry", q);
        }
        for q in 0..n.saturating_sub(1) {
            b.cx(q, q + 1);
        }
        if n > 2 {
            b.cx(n - 1, 0);
        }
    }
    for q in 0..n {
        single(&mut b, "ry", q);
    }
    b.build()
}

/// `gates` CX gates between uniformly random distinct qubit pairs.
pub fn random_circuit(n: usize, gates: usize, seed: u64) -> CircuitDag {
    let mut b = CircuitBuilder::new(n);
    if n < 2 {
        return b.build();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut qubits: Vec<usize> = (0..n).collect();
    for _ in 0..gates {
        let (pair, _) = qubits.partial_shuffle(&mut rng, 2);
        b.cx(pair[0], pair[1]);
    }
    b.build()
}
