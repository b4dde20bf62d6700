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

//! Multi-core device topology.
//!
//! Physical qubits are numbered `0..N` and partitioned into cores. Each core
//! has an intra-core coupling graph; SWAPs and local two-qubit gates need an
//! edge of that graph. Communication qubits additionally take part in
//! inter-core links, over which teledata and telegate protocols run.

use std::collections::{BTreeSet, VecDeque};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArchitectureError {
    #[error("malformed architecture description: {0}")]
    Schema(String),
    #[error("physical qubit {0} is listed more than once")]
    DuplicateQubit(usize),
    #[error("physical qubit ids must cover 0..{expected} exactly")]
    NonContiguousIds { expected: usize },
    #[error("qubit {qubit} referenced by core {core} is not one of its qubits")]
    ForeignQubit { core: usize, qubit: usize },
    #[error("core {0} has fewer than two physical qubits")]
    CoreTooSmall(usize),
    #[error("coupling graph of core {0} is disconnected")]
    Disconnected(usize),
    #[error("core {0} has no communication qubit")]
    NoCommQubit(usize),
    #[error("link {0}-{1} joins qubits of the same core")]
    LinkWithinCore(usize, usize),
    #[error("link endpoint {0} is not a communication qubit")]
    LinkNotComm(usize),
    #[error("link endpoint {0} does not exist")]
    UnknownQubit(usize),
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitKind {
    Data,
    Communication,
}

/// Serialized form of one core.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreSpec {
    pub qubits: Vec<usize>,
    pub comm_qubits: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
}

/// Serialized architecture:
/// `{"cores": [{"qubits": [..], "comm_qubits": [..], "edges": [[a,b],..]}], "links": [[c1,c2],..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub cores: Vec<CoreSpec>,
    pub links: Vec<[usize; 2]>,
}

/// Per-core all-pairs hop distances over intra-core edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceTable {
    core_of: Vec<usize>,
    local: Vec<usize>,
    sizes: Vec<usize>,
    matrices: Vec<Vec<u32>>,
}

impl DistanceTable {
    /// Hop distance between two qubits of the same core, `None` across cores.
    pub fn get(&self, a: usize, b: usize) -> Option<u32> {
        let core = self.core_of[a];
        if core != self.core_of[b] {
            return None;
        }
        Some(self.matrices[core][self.local[a] * self.sizes[core] + self.local[b]])
    }

    /// Hop distance between two qubits known to share a core.
    pub fn hops(&self, a: usize, b: usize) -> u32 {
        self.get(a, b)
            .unwrap_or_else(|| panic!("qubits {a} and {b} lie in different cores"))
    }

    /// Largest finite distance within `core`.
    pub fn diameter(&self, core: usize) -> u32 {
        self.matrices[core].iter().copied().max().unwrap_or(0)
    }
}

const UNREACHABLE: u32 = u32::MAX / 2;

/// Floyd-Warshall on every core's coupling graph. Inter-core links are
/// ignored since SWAPs never cross cores.
pub fn compute_distances(arch: &Architecture) -> DistanceTable {
    floyd_warshall(arch.num_qubits, &arch.cores, &arch.neighbors)
}

fn floyd_warshall(num_qubits: usize, cores: &[Core], neighbors: &[Vec<usize>]) -> DistanceTable {
    let mut core_of = vec![0; num_qubits];
    let mut local = vec![0; num_qubits];
    let mut sizes = Vec::with_capacity(cores.len());
    let mut matrices = Vec::with_capacity(cores.len());
    for (c, core) in cores.iter().enumerate() {
        for (i, &q) in core.qubits.iter().enumerate() {
            core_of[q] = c;
            local[q] = i;
        }
    }
    for core in cores {
        let n = core.qubits.len();
        let mut d = vec![UNREACHABLE; n * n];
        for (i, &q) in core.qubits.iter().enumerate() {
            d[i * n + i] = 0;
            for &r in &neighbors[q] {
                d[i * n + local[r]] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = d[i * n + k];
                if dik == UNREACHABLE {
                    continue;
                }
                for j in 0..n {
                    let via = dik + d[k * n + j];
                    if via < d[i * n + j] {
                        d[i * n + j] = via;
                    }
                }
            }
        }
        sizes.push(n);
        matrices.push(d);
    }
    DistanceTable {
        core_of,
        local,
        sizes,
        matrices,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Core {
    qubits: Vec<usize>,
    comm_qubits: Vec<usize>,
}

/// A validated multi-core architecture with precomputed distances.
#[derive(Debug, Clone)]
pub struct Architecture {
    spec: ArchitectureSpec,
    num_qubits: usize,
    cores: Vec<Core>,
    core_of: Vec<usize>,
    kind: Vec<QubitKind>,
    neighbors: Vec<Vec<usize>>,
    links: Vec<(usize, usize)>,
    link_partners: Vec<Vec<usize>>,
    comm_qubits: Vec<usize>,
    /// Position of each qubit in `comm_qubits`, `usize::MAX` for data qubits.
    comm_index: Vec<usize>,
    /// Per comm index: (other comm index, intra-core hops, is link).
    comm_adjacency: Vec<Vec<(usize, u32, bool)>>,
    distances: DistanceTable,
}

impl Architecture {
    pub fn from_spec(spec: ArchitectureSpec) -> Result<Self, ArchitectureError> {
        if spec.cores.is_empty() {
            return Err(ArchitectureError::Schema("no cores".into()));
        }
        let num_qubits: usize = spec.cores.iter().map(|c| c.qubits.len()).sum();
        let mut core_of = vec![usize::MAX; num_qubits];
        for (c, core) in spec.cores.iter().enumerate() {
            for &q in &core.qubits {
                if q >= num_qubits {
                    return Err(ArchitectureError::NonContiguousIds {
                        expected: num_qubits,
                    });
                }
                if core_of[q] != usize::MAX {
                    return Err(ArchitectureError::DuplicateQubit(q));
                }
                core_of[q] = c;
            }
        }

        let mut kind = vec![QubitKind::Data; num_qubits];
        let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); num_qubits];
        let mut cores = Vec::with_capacity(spec.cores.len());
        for (c, core) in spec.cores.iter().enumerate() {
            if core.qubits.len() < 2 {
                return Err(ArchitectureError::CoreTooSmall(c));
            }
            let foreign = |q: usize| q >= num_qubits || core_of[q] != c;
            for &q in &core.comm_qubits {
                if foreign(q) {
                    return Err(ArchitectureError::ForeignQubit { core: c, qubit: q });
                }
                kind[q] = QubitKind::Communication;
            }
            for &[a, b] in &core.edges {
                if foreign(a) {
                    return Err(ArchitectureError::ForeignQubit { core: c, qubit: a });
                }
                if foreign(b) {
                    return Err(ArchitectureError::ForeignQubit { core: c, qubit: b });
                }
                if a == b {
                    return Err(ArchitectureError::Schema(format!("self-loop on qubit {a}")));
                }
                neighbors[a].insert(b);
                neighbors[b].insert(a);
            }
            let mut qubits = core.qubits.clone();
            qubits.sort_unstable();
            let mut comm_qubits = core.comm_qubits.clone();
            comm_qubits.sort_unstable();
            comm_qubits.dedup();
            cores.push(Core {
                qubits,
                comm_qubits,
            });
        }
        let neighbors: Vec<Vec<usize>> = neighbors
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();

        for (c, core) in cores.iter().enumerate() {
            let mut seen = BTreeSet::from([core.qubits[0]]);
            let mut queue = VecDeque::from([core.qubits[0]]);
            while let Some(q) = queue.pop_front() {
                for &r in &neighbors[q] {
                    if seen.insert(r) {
                        queue.push_back(r);
                    }
                }
            }
            if seen.len() != core.qubits.len() {
                return Err(ArchitectureError::Disconnected(c));
            }
            if cores.len() > 1 && core.comm_qubits.is_empty() {
                return Err(ArchitectureError::NoCommQubit(c));
            }
        }

        let mut link_partners = vec![Vec::new(); num_qubits];
        let mut links = Vec::with_capacity(spec.links.len());
        for &[a, b] in &spec.links {
            for q in [a, b] {
                if q >= num_qubits {
                    return Err(ArchitectureError::UnknownQubit(q));
                }
                if kind[q] != QubitKind::Communication {
                    return Err(ArchitectureError::LinkNotComm(q));
                }
            }
            if core_of[a] == core_of[b] {
                return Err(ArchitectureError::LinkWithinCore(a, b));
            }
            links.push((a, b));
            link_partners[a].push(b);
            link_partners[b].push(a);
        }
        for partners in &mut link_partners {
            partners.sort_unstable();
            partners.dedup();
        }
        let comm_qubits: Vec<usize> = (0..num_qubits)
            .filter(|&q| kind[q] == QubitKind::Communication)
            .collect();
        let mut comm_index = vec![usize::MAX; num_qubits];
        for (i, &c) in comm_qubits.iter().enumerate() {
            comm_index[c] = i;
        }
        let distances = floyd_warshall(num_qubits, &cores, &neighbors);
        let comm_adjacency = comm_qubits
            .iter()
            .map(|&c| {
                let intra = cores[core_of[c]]
                    .comm_qubits
                    .iter()
                    .filter(|&&d| d != c)
                    .map(|&d| (comm_index[d], distances.hops(c, d), false));
                let remote = link_partners[c].iter().map(|&d| (comm_index[d], 0, true));
                intra.chain(remote).collect()
            })
            .collect();

        Ok(Self {
            spec,
            num_qubits,
            cores,
            core_of,
            kind,
            neighbors,
            links,
            link_partners,
            comm_qubits,
            comm_index,
            comm_adjacency,
            distances,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ArchitectureError> {
        let spec: ArchitectureSpec =
            serde_json::from_str(text).map_err(|e| ArchitectureError::Schema(e.to_string()))?;
        Self::from_spec(spec)
    }

    pub fn spec(&self) -> &ArchitectureSpec {
        &self.spec
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.spec).expect("architecture serialization cannot fail")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_cores(&self) -> usize {
        self.cores.len()
    }

    pub fn core_of(&self, qubit: usize) -> usize {
        self.core_of[qubit]
    }

    pub fn kind(&self, qubit: usize) -> QubitKind {
        self.kind[qubit]
    }

    pub fn is_comm(&self, qubit: usize) -> bool {
        self.kind[qubit] == QubitKind::Communication
    }

    /// Physical qubits of `core` in ascending order.
    pub fn core_qubits(&self, core: usize) -> &[usize] {
        &self.cores[core].qubits
    }

    pub fn core_comm_qubits(&self, core: usize) -> &[usize] {
        &self.cores[core].comm_qubits
    }

    /// All communication qubits in ascending order.
    pub fn comm_qubits(&self) -> &[usize] {
        &self.comm_qubits
    }

    /// Position of a communication qubit in [`Self::comm_qubits`].
    pub fn comm_index(&self, qubit: usize) -> Option<usize> {
        self.comm_index
            .get(qubit)
            .copied()
            .filter(|&i| i != usize::MAX)
    }

    /// Comm-level graph by comm index: `(other, hops, is_link)` with the
    /// intra-core hop distance, or 0 for an inter-core link.
    pub fn comm_adjacency(&self, index: usize) -> &[(usize, u32, bool)] {
        &self.comm_adjacency[index]
    }

    /// Intra-core neighbours of `qubit`, ascending.
    pub fn neighbors(&self, qubit: usize) -> &[usize] {
        &self.neighbors[qubit]
    }

    pub fn are_coupled(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// Undirected intra-core edges `(a, b)` with `a < b`, ascending.
    pub fn intra_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    /// Communication qubits linked to `qubit`.
    pub fn link_partners(&self, qubit: usize) -> &[usize] {
        &self.link_partners[qubit]
    }

    pub fn is_link(&self, a: usize, b: usize) -> bool {
        self.link_partners[a].binary_search(&b).is_ok()
    }

    /// Links between two cores, oriented `(endpoint in from, endpoint in to)`,
    /// ascending and deduplicated.
    pub fn links_between(&self, from: usize, to: usize) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self.cores[from]
            .comm_qubits
            .iter()
            .flat_map(|&a| {
                self.link_partners[a]
                    .iter()
                    .filter(|&&b| self.core_of[b] == to)
                    .map(move |&b| (a, b))
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Cores directly linked to `core`, ascending.
    pub fn adjacent_cores(&self, core: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self.cores[core]
            .comm_qubits
            .iter()
            .flat_map(|&a| self.link_partners[a].iter().map(|&b| self.core_of[b]))
            .collect();
        set.into_iter().collect()
    }

    pub fn distances(&self) -> &DistanceTable {
        &self.distances
    }

    /// Intra-core hop distance; panics across cores.
    pub fn hops(&self, a: usize, b: usize) -> u32 {
        self.distances.hops(a, b)
    }

    /// First step of a shortest intra-core path from `from` to `to`
    /// (smallest-id neighbour on such a path). `None` if `from == to` or
    /// the qubits lie in different cores.
    pub fn next_hop(&self, from: usize, to: usize) -> Option<usize> {
        let d = self.distances.get(from, to)?;
        if d == 0 {
            return None;
        }
        self.neighbors[from]
            .iter()
            .copied()
            .find(|&n| self.distances.hops(n, to) + 1 == d)
    }
}

/// Parameters of the grid-of-grids generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub cores_x: usize,
    pub cores_y: usize,
    pub core_rows: usize,
    pub core_cols: usize,
    pub comm_per_side: usize,
}

impl FromStr for GridSpec {
    type Err = ArchitectureError;

    /// Parses `grid:CXxCY,RxC,COMM`, for example `grid:3x2,4x4,2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || {
            ArchitectureError::InvalidParameter(format!(
                "expected `grid:CXxCY,RxC,COMM`, got `{s}`"
            ))
        };
        let body = s.trim().strip_prefix("grid:").ok_or_else(bad)?;
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        let [cores, core, comm] = parts.as_slice() else {
            return Err(bad());
        };
        let pair = |t: &str| -> Result<(usize, usize), ArchitectureError> {
            let (a, b) = t.split_once(['x', 'X']).ok_or_else(bad)?;
            Ok((
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ))
        };
        let (cores_x, cores_y) = pair(cores)?;
        let (core_rows, core_cols) = pair(core)?;
        Ok(GridSpec {
            cores_x,
            cores_y,
            core_rows,
            core_cols,
            comm_per_side: comm.parse().map_err(|_| bad())?,
        })
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "grid:{}x{},{}x{},{}",
            self.cores_x, self.cores_y, self.core_rows, self.core_cols, self.comm_per_side
        )
    }
}

/// `count` evenly spread positions along a side of length `len`, kept off
/// the two corners when the side is long enough so that no boundary qubit
/// serves two sides.
fn spread(count: usize, len: usize) -> impl Iterator<Item = usize> {
    let (offset, span) = if len >= 3 && count <= len - 2 {
        (1, len - 2)
    } else {
        (0, len)
    };
    (0..count).map(move |k| offset + (2 * k + 1) * span / (2 * count))
}

/// Grid of cores, each a `core_rows x core_cols` nearest-neighbour lattice.
///
/// Qubits are numbered row-major within a core and core-major overall, cores
/// row-major over the `cores_x x cores_y` grid. Every pair of horizontally or
/// vertically adjacent cores gets `comm_per_side` links between facing
/// boundary qubits.
pub fn generate_grid_architecture(grid: GridSpec) -> Result<Architecture, ArchitectureError> {
    let GridSpec {
        cores_x,
        cores_y,
        core_rows,
        core_cols,
        comm_per_side,
    } = grid;
    let invalid = |m: &str| Err(ArchitectureError::InvalidParameter(m.to_string()));
    if cores_x == 0 || cores_y == 0 || core_rows == 0 || core_cols == 0 || comm_per_side == 0 {
        return invalid("all grid parameters must be at least 1");
    }
    if core_rows * core_cols < 2 {
        return invalid("cores need at least two qubits");
    }
    if cores_x > 1 && comm_per_side > core_rows {
        return invalid("comm_per_side exceeds the core's vertical side");
    }
    if cores_y > 1 && comm_per_side > core_cols {
        return invalid("comm_per_side exceeds the core's horizontal side");
    }

    let per_core = core_rows * core_cols;
    let qubit = |core: usize, r: usize, c: usize| core * per_core + r * core_cols + c;
    let mut cores: Vec<CoreSpec> = (0..cores_x * cores_y)
        .map(|core| {
            let mut edges = Vec::new();
            for r in 0..core_rows {
                for c in 0..core_cols {
                    if c + 1 < core_cols {
                        edges.push([qubit(core, r, c), qubit(core, r, c + 1)]);
                    }
                    if r + 1 < core_rows {
                        edges.push([qubit(core, r, c), qubit(core, r + 1, c)]);
                    }
                }
            }
            CoreSpec {
                qubits: (core * per_core..(core + 1) * per_core).collect(),
                comm_qubits: Vec::new(),
                edges,
            }
        })
        .collect();

    let mut links = Vec::new();
    for cy in 0..cores_y {
        for cx in 0..cores_x {
            let core = cy * cores_x + cx;
            if cx + 1 < cores_x {
                for r in spread(comm_per_side, core_rows) {
                    links.push([qubit(core, r, core_cols - 1), qubit(core + 1, r, 0)]);
                }
            }
            if cy + 1 < cores_y {
                for c in spread(comm_per_side, core_cols) {
                    links.push([qubit(core, core_rows - 1, c), qubit(core + cores_x, 0, c)]);
                }
            }
        }
    }
    for &[a, b] in &links {
        cores[a / per_core].comm_qubits.push(a);
        cores[b / per_core].comm_qubits.push(b);
    }
    for core in &mut cores {
        core.comm_qubits.sort_unstable();
        core.comm_qubits.dedup();
    }
    Architecture::from_spec(ArchitectureSpec { cores, links })
}
