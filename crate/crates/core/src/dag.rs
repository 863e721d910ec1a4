//! DAG view of a circuit and the path-count proxy.

use num_bigint::BigUint;

use crate::circuit::Circuit;

/// Node 0 is the source, nodes `1..=g` are the gates in order, node `g + 1`
/// is the sink. Edges are kept as a multiset, one per wire segment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitDag {
    n_gates: usize,
    n_wires: usize,
    edges: Vec<(usize, usize)>,
}

impl CircuitDag {
    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        self.n_gates + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.n_gates + 2
    }

    pub fn n_wires(&self) -> usize {
        self.n_wires
    }

    /// `(from, to)` pairs, sorted by `to` then by wire.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |(f, _)| *f == node)
            .map(|(_, t)| *t)
    }
}

/// Panics if a gate references a wire `>= n_wires`.
pub fn build_dag(circuit: &Circuit, n_wires: usize) -> CircuitDag {
    let gates = circuit.gates();
    let mut last = vec![0usize; n_wires];
    let mut edges = Vec::with_capacity(2 * gates.len() + n_wires);
    for (i, g) in gates.iter().enumerate() {
        let node = i + 1;
        for q in g.qubits() {
            assert!(
                q < n_wires,
                "gate {i} uses wire {q} but the DAG has {n_wires} wires"
            );
            edges.push((last[q], node));
            last[q] = node;
        }
    }
    let sink = gates.len() + 1;
    edges.extend(last.iter().map(|&from| (from, sink)));
    CircuitDag {
        n_gates: gates.len(),
        n_wires,
        edges,
    }
}

/// Number of distinct source-to-sink paths, parallel edges counted separately.
pub fn count_paths(dag: &CircuitDag) -> BigUint {
    let mut paths = vec![BigUint::ZERO; dag.num_nodes()];
    paths[0] = BigUint::from(1u32);
    // Edges are emitted in increasing target order, which is a topological order.
    for &(from, to) in &dag.edges {
        let p = paths[from].clone();
        paths[to] += p;
    }
    std::mem::take(&mut paths[dag.sink()])
}

pub fn path_count(circuit: &Circuit, n_wires: usize) -> BigUint {
    count_paths(&build_dag(circuit, n_wires))
}
