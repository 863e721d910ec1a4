//! Distributed device model: qubits split across QPUs, intra-QPU couplings,
//! inter-QPU quantum links, and the logical → data qubit assignment.
//!
//! Qubit ids are dense indices `0..n`. Couplings and links are undirected and
//! stored normalized as `(min, max)`.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("malformed topology: {0}")]
    Malformed(String),
    #[error("qubit ids must be exactly 0..{n} with no gaps or repeats (problem at id {id})")]
    BadIds { n: usize, id: usize },
    #[error("{kind} ({a}, {b}) references an unknown qubit")]
    UnknownQubit {
        kind: &'static str,
        a: usize,
        b: usize,
    },
    #[error("{kind} ({a}, {b}) is a self-loop")]
    SelfLoop {
        kind: &'static str,
        a: usize,
        b: usize,
    },
    #[error("coupling ({a}, {b}) crosses QPUs")]
    CouplingCrossesQpu { a: usize, b: usize },
    #[error(
        "link ({a}, {b}) touches data qubit {qubit}; link endpoints must be communication qubits"
    )]
    LinkOnDataQubit { a: usize, b: usize, qubit: usize },
    #[error("link ({a}, {b}) joins two qubits on the same QPU")]
    LinkWithinQpu { a: usize, b: usize },
    #[error("duplicate link ({a}, {b})")]
    DuplicateLink { a: usize, b: usize },
    #[error("data qubit {qubit} is coupled to more than one communication qubit")]
    MultipleCommNeighbors { qubit: usize },
    #[error(
        "requested {requested} logical qubits but the device has only {available} data qubits"
    )]
    TooManyLogical { requested: usize, available: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Data,
    Communication,
}

/// Index into [`DeviceGraph::links`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeviceGraph {
    roles: Vec<Role>,
    qpu: Vec<u32>,
    couplings: BTreeSet<(usize, usize)>,
    links: Vec<(usize, usize)>,
    neighbors: Vec<BTreeSet<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    #[serde(default)]
    couplings: Vec<[usize; 2]>,
    #[serde(default)]
    links: Vec<[usize; 2]>,
    qubits: Vec<QubitEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QubitEntry {
    id: usize,
    role: Role,
    qpu: u32,
}

fn normalize(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl DeviceGraph {
    /// Builds and validates a device. `qubits` is indexed by qubit id.
    pub fn new(
        qubits: Vec<(Role, u32)>,
        couplings: impl IntoIterator<Item = (usize, usize)>,
        links: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, DeviceError> {
        let n = qubits.len();
        let (roles, qpu): (Vec<_>, Vec<_>) = qubits.into_iter().unzip();

        let mut coupling_set = BTreeSet::new();
        for (a, b) in couplings {
            if a >= n || b >= n {
                return Err(DeviceError::UnknownQubit {
                    kind: "coupling",
                    a,
                    b,
                });
            }
            if a == b {
                return Err(DeviceError::SelfLoop {
                    kind: "coupling",
                    a,
                    b,
                });
            }
            if qpu[a] != qpu[b] {
                return Err(DeviceError::CouplingCrossesQpu { a, b });
            }
            coupling_set.insert(normalize(a, b));
        }

        let mut link_set = BTreeSet::new();
        for (a, b) in links {
            if a >= n || b >= n {
                return Err(DeviceError::UnknownQubit { kind: "link", a, b });
            }
            if a == b {
                return Err(DeviceError::SelfLoop { kind: "link", a, b });
            }
            for q in [a, b] {
                if roles[q] != Role::Communication {
                    return Err(DeviceError::LinkOnDataQubit { a, b, qubit: q });
                }
            }
            if qpu[a] == qpu[b] {
                return Err(DeviceError::LinkWithinQpu { a, b });
            }
            if !link_set.insert(normalize(a, b)) {
                return Err(DeviceError::DuplicateLink { a, b });
            }
        }

        let mut neighbors = vec![BTreeSet::new(); n];
        for &(a, b) in &coupling_set {
            neighbors[a].insert(b);
            neighbors[b].insert(a);
        }
        for q in 0..n {
            if roles[q] == Role::Data {
                let comm = neighbors[q]
                    .iter()
                    .filter(|&&y| roles[y] == Role::Communication)
                    .count();
                if comm > 1 {
                    return Err(DeviceError::MultipleCommNeighbors { qubit: q });
                }
            }
        }

        Ok(Self {
            roles,
            qpu,
            couplings: coupling_set,
            links: link_set.into_iter().collect(),
            neighbors,
        })
    }

    /// Two 5-qubit Yorktown QPUs joined by a single link between q4 and q5.
    ///
    /// QPU 0 is `q0..q4` with communication qubit q4 coupled to q2 and q3.
    /// QPU 1 is `q5..q9`, the mirror image with q5 as communication qubit:
    /// q7 plays the role of q2 (hub) and q6 the role of q3.
    pub fn yorktown_pair() -> Self {
        let mut qubits = Vec::with_capacity(10);
        for q in 0..10 {
            let role = if q == 4 || q == 5 {
                Role::Communication
            } else {
                Role::Data
            };
            qubits.push((role, if q < 5 { 0 } else { 1 }));
        }
        let couplings = [
            (0, 1),
            (0, 2),
            (1, 2),
            (2, 3),
            (2, 4),
            (3, 4),
            (8, 9),
            (7, 8),
            (7, 9),
            (6, 7),
            (5, 7),
            (5, 6),
        ];
        Self::new(qubits, couplings, [(4, 5)]).expect("built-in topology is valid")
    }

    /// Parses and validates a TOML topology file.
    pub fn from_toml_str(text: &str) -> Result<Self, DeviceError> {
        let file: TopologyFile =
            toml::from_str(text).map_err(|e| DeviceError::Malformed(e.to_string()))?;
        let n = file.qubits.len();
        let mut slots: Vec<Option<(Role, u32)>> = vec![None; n];
        for entry in &file.qubits {
            if entry.id >= n || slots[entry.id].is_some() {
                return Err(DeviceError::BadIds { n, id: entry.id });
            }
            slots[entry.id] = Some((entry.role, entry.qpu));
        }
        let qubits = slots
            .into_iter()
            .map(|s| s.expect("all ids filled"))
            .collect();
        Self::new(
            qubits,
            file.couplings.iter().map(|p| (p[0], p[1])),
            file.links.iter().map(|p| (p[0], p[1])),
        )
    }

    /// Canonical TOML form; `from_toml_str(d.to_toml_string()) == d`.
    pub fn to_toml_string(&self) -> String {
        let file = TopologyFile {
            couplings: self.couplings.iter().map(|&(a, b)| [a, b]).collect(),
            links: self.links.iter().map(|&(a, b)| [a, b]).collect(),
            qubits: (0..self.num_qubits())
                .map(|id| QubitEntry {
                    id,
                    role: self.roles[id],
                    qpu: self.qpu[id],
                })
                .collect(),
        };
        toml::to_string(&file).expect("topology serializes")
    }

    /// Short stable hash of the canonical form, used to tie circuits to a device.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn num_qubits(&self) -> usize {
        self.roles.len()
    }

    pub fn role(&self, q: usize) -> Role {
        self.roles[q]
    }

    pub fn is_data(&self, q: usize) -> bool {
        self.roles.get(q) == Some(&Role::Data)
    }

    pub fn qpu_of(&self, q: usize) -> u32 {
        self.qpu[q]
    }

    pub fn data_qubits(&self) -> Vec<usize> {
        (0..self.num_qubits())
            .filter(|&q| self.is_data(q))
            .collect()
    }

    pub fn num_data_qubits(&self) -> usize {
        self.roles.iter().filter(|r| **r == Role::Data).count()
    }

    pub fn couplings(&self) -> &BTreeSet<(usize, usize)> {
        &self.couplings
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> (usize, usize) {
        self.links[id.0]
    }

    /// Coupling neighbours of `q` (any role).
    pub fn neighbors(&self, q: usize) -> &BTreeSet<usize> {
        &self.neighbors[q]
    }

    pub fn coupled(&self, a: usize, b: usize) -> bool {
        self.couplings.contains(&normalize(a, b))
    }

    /// The communication qubit a data qubit is coupled to, if any.
    pub fn comm_neighbor(&self, q: usize) -> Option<usize> {
        self.neighbors[q]
            .iter()
            .copied()
            .find(|&y| self.roles[y] == Role::Communication)
    }

    /// Links incident to communication qubit `c`, paired with the far endpoint.
    pub fn links_at(&self, c: usize) -> impl Iterator<Item = (LinkId, usize)> + '_ {
        self.links
            .iter()
            .enumerate()
            .filter_map(move |(i, &(a, b))| {
                if a == c {
                    Some((LinkId(i), b))
                } else if b == c {
                    Some((LinkId(i), a))
                } else {
                    None
                }
            })
    }

    pub fn find_link(&self, a: usize, b: usize) -> Option<LinkId> {
        let key = normalize(a, b);
        self.links.iter().position(|&l| l == key).map(LinkId)
    }
}

impl fmt::Display for DeviceGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} qubits ({} data), {} couplings, {} links",
            self.num_qubits(),
            self.num_data_qubits(),
            self.couplings.len(),
            self.links.len()
        )
    }
}

/// Injective map from logical qubit index to data qubit id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QubitAssignment {
    map: Vec<usize>,
    empty: BTreeSet<usize>,
}

impl QubitAssignment {
    /// `map[i]` is the data qubit hosting logical qubit `i`; `data` lists every
    /// data qubit of the device.
    pub fn new(map: Vec<usize>, data: &[usize]) -> Result<Self, DeviceError> {
        let data_set: BTreeSet<usize> = data.iter().copied().collect();
        let mut used = BTreeSet::new();
        for &q in &map {
            if !data_set.contains(&q) || !used.insert(q) {
                return Err(DeviceError::Malformed(format!(
                    "assignment target {q} is not a distinct data qubit"
                )));
            }
        }
        let empty = data_set.difference(&used).copied().collect();
        Ok(Self { map, empty })
    }

    /// Identity assignment over qubits `0..n`, all of them data qubits.
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
            empty: BTreeSet::new(),
        }
    }

    pub fn from_parts(map: Vec<usize>, empty: BTreeSet<usize>) -> Result<Self, DeviceError> {
        let mut data: Vec<usize> = map.clone();
        data.extend(empty.iter().copied());
        Self::new(map, &data)
    }

    pub fn n_logical(&self) -> usize {
        self.map.len()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn physical(&self, logical: usize) -> usize {
        self.map[logical]
    }

    pub fn empty_set(&self) -> &BTreeSet<usize> {
        &self.empty
    }

    /// Physical → logical occupancy table sized for `n_qubits` physical qubits.
    pub fn occupancy(&self, n_qubits: usize) -> Vec<Option<usize>> {
        let mut occ = vec![None; n_qubits];
        for (logical, &q) in self.map.iter().enumerate() {
            occ[q] = Some(logical);
        }
        occ
    }
}

/// Uniformly random injective assignment of `n_logical` logical qubits.
pub fn sample_assignment<R: Rng + ?Sized>(
    device: &DeviceGraph,
    n_logical: usize,
    rng: &mut R,
) -> Result<QubitAssignment, DeviceError> {
    let mut data = device.data_qubits();
    if n_logical > data.len() {
        return Err(DeviceError::TooManyLogical {
            requested: n_logical,
            available: data.len(),
        });
    }
    let all = data.clone();
    let (chosen, _) = data.partial_shuffle(rng, n_logical);
    QubitAssignment::new(chosen.to_vec(), &all)
}
