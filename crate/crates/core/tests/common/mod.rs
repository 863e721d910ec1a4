//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use dqas::circuit::{Circuit, Gate, Method};
use dqas::circuitgen::{GenRequest, Generator};
use dqas::dag::CircuitDag;
use dqas::device::{DeviceGraph, QubitAssignment, Role};
use dqas::vcg::PositionSets;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Dense diagonalization of the periodic 6-site chains, computed with numpy.
pub const TFIM6_GROUND: f64 = -7.72740661031254;
pub const HEISENBERG6_GROUND: f64 = -11.211102550927983;

/// Random valid device with at most `max_qubits` qubits.
pub fn random_device<R: Rng>(rng: &mut R, max_qubits: usize) -> DeviceGraph {
    loop {
        let n_qpus = rng.random_range(1..=3usize);
        let mut qubits: Vec<(Role, u32)> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut comms: Vec<Vec<usize>> = Vec::new();
        for p in 0..n_qpus {
            let size = rng.random_range(2..=5usize);
            let n_comm = rng.random_range(0..=size.min(2) - 1);
            let mut mem = Vec::new();
            let mut cm = Vec::new();
            for k in 0..size {
                let id = qubits.len();
                let role = if k < n_comm {
                    cm.push(id);
                    Role::Communication
                } else {
                    Role::Data
                };
                qubits.push((role, p as u32));
                mem.push(id);
            }
            members.push(mem);
            comms.push(cm);
        }
        if qubits.len() > max_qubits {
            continue;
        }
        let mut couplings = Vec::new();
        for (p, mem) in members.iter().enumerate() {
            let mut comm_of: Vec<Option<usize>> = vec![None; qubits.len()];
            for i in 0..mem.len() {
                for j in i + 1..mem.len() {
                    if !rng.random_bool(0.55) {
                        continue;
                    }
                    let (a, b) = (mem[i], mem[j]);
                    let (ca, cb) = (comms[p].contains(&a), comms[p].contains(&b));
                    // A data qubit may touch at most one communication qubit.
                    if ca && !cb {
                        if comm_of[b].is_some_and(|c| c != a) {
                            continue;
                        }
                        comm_of[b] = Some(a);
                    }
                    if cb && !ca {
                        if comm_of[a].is_some_and(|c| c != b) {
                            continue;
                        }
                        comm_of[a] = Some(b);
                    }
                    couplings.push((a, b));
                }
            }
        }
        let all_comm: Vec<(usize, usize)> = comms
            .iter()
            .enumerate()
            .flat_map(|(p, cs)| cs.iter().map(move |&c| (p, c)))
            .collect();
        let mut links = Vec::new();
        for i in 0..all_comm.len() {
            for j in i + 1..all_comm.len() {
                if all_comm[i].0 != all_comm[j].0 && rng.random_bool(0.7) {
                    links.push((all_comm[i].1, all_comm[j].1));
                }
            }
        }
        return DeviceGraph::new(qubits, couplings, links).expect("generator builds valid devices");
    }
}

/// Position sets evaluated literally from the set-builder definitions, by
/// scanning the edge list for every query.
pub fn brute_force_sets(d: &DeviceGraph) -> PositionSets {
    let n = d.num_qubits();
    let e: Vec<(usize, usize)> = d.couplings().iter().copied().collect();
    let data = |q: usize| d.role(q) == Role::Data;
    let edge = |a: usize, b: usize| e.contains(&(a, b)) || e.contains(&(b, a));
    // R'(x) = { y | (x, y) in E }
    let rp = |x: usize| -> BTreeSet<usize> { (0..n).filter(|&y| edge(x, y)).collect() };
    let rpp = |x: usize| -> BTreeSet<usize> { rp(x).into_iter().flat_map(&rp).collect() };

    let local: BTreeSet<(usize, usize)> = e
        .iter()
        .copied()
        .filter(|&(a, b)| data(a) && data(b))
        .collect();
    let in_local = |a: usize, b: usize| local.contains(&(a, b)) || local.contains(&(b, a));
    let r = |x: usize| -> BTreeSet<usize> { (0..n).filter(|&y| in_local(x, y)).collect() };
    let swap = local
        .iter()
        .copied()
        .filter(|&(a, b)| {
            let ra: BTreeSet<_> = r(a).into_iter().filter(|&y| y != b).collect();
            let rb: BTreeSet<_> = r(b).into_iter().filter(|&y| y != a).collect();
            ra != rb
        })
        .collect();

    let mut telegate = BTreeSet::new();
    let mut teledata = BTreeSet::new();
    for &(l0, l1) in d.links() {
        for (a, b) in [(l0, l1), (l1, l0)] {
            for x in rp(a) {
                for y in rp(b) {
                    if data(x) && data(y) {
                        telegate.insert((x, y));
                    }
                }
            }
            let left: BTreeSet<usize> = rpp(a).into_iter().filter(|&x| x != a).collect();
            let right: BTreeSet<usize> = rpp(b).into_iter().filter(|&x| x != b).collect();
            for &x in &left {
                for y in rp(b) {
                    if data(x) && data(y) {
                        teledata.insert((x, y));
                    }
                }
            }
            for x in rp(a) {
                for &y in &right {
                    if data(x) && data(y) {
                        teledata.insert((x, y));
                    }
                }
            }
        }
    }
    PositionSets {
        local,
        swap,
        telegate,
        teledata,
    }
}

/// Counts source-to-sink paths by explicit depth-first enumeration.
pub fn dfs_paths(dag: &CircuitDag) -> u128 {
    let mut adj = vec![Vec::new(); dag.num_nodes()];
    for &(f, t) in dag.edges() {
        adj[f].push(t);
    }
    let mut count = 0u128;
    let mut stack = vec![dag.source()];
    while let Some(v) = stack.pop() {
        if v == dag.sink() {
            count += 1;
        } else {
            stack.extend(adj[v].iter().copied());
        }
    }
    count
}

/// Random circuit on `n` wires made of U, CNOT and SWAP gates.
pub fn random_circuit<R: Rng>(rng: &mut R, n: usize, n_gates: usize) -> Circuit {
    let mut gates = Vec::with_capacity(n_gates);
    let mut slot = 0;
    for _ in 0..n_gates {
        let kind = if n < 2 { 0 } else { rng.random_range(0..3) };
        if kind == 0 {
            gates.push(Gate::U {
                qubit: rng.random_range(0..n),
                slot,
            });
            slot += 3;
        } else {
            let mut q: Vec<usize> = (0..n).collect();
            q.shuffle(rng);
            gates.push(if kind == 1 {
                Gate::cnot(q[0], q[1])
            } else {
                Gate::Swap { a: q[0], b: q[1] }
            });
        }
    }
    Circuit::new(QubitAssignment::identity(n), gates).expect("valid random circuit")
}

/// Hardware-efficient ansatz: `layers` of U on every wire then a CNOT ladder.
pub fn layered_circuit(n: usize, layers: usize) -> Circuit {
    let mut gates = Vec::new();
    let mut slot = 0;
    for _ in 0..layers {
        for q in 0..n {
            gates.push(Gate::U { qubit: q, slot });
            slot += 3;
        }
        for q in 0..n - 1 {
            gates.push(Gate::cnot(q, q + 1));
        }
    }
    for q in 0..n {
        gates.push(Gate::U { qubit: q, slot });
        slot += 3;
    }
    Circuit::new(QubitAssignment::identity(n), gates).expect("valid layered circuit")
}

/// Haar-random state from normalized complex Gaussian amplitudes.
pub fn haar_state<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut v {
        *a /= norm;
    }
    v
}

pub fn random_params<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect()
}

pub fn generate(
    device: &DeviceGraph,
    method: Method,
    n_gates: usize,
    n_logical: usize,
    p_nonlocal: f64,
    seed: u64,
) -> Circuit {
    Generator::new(device)
        .generate(&GenRequest {
            n_gates,
            gate_dist: [0.5, 0.25, 0.25],
            p_nonlocal,
            method,
            n_logical,
            seed,
        })
        .expect("generation succeeds on the default device")
}
