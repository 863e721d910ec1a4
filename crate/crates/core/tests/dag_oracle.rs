mod common;

use dqas::circuit::{Circuit, Gate, Method};
use dqas::dag::{build_dag, count_paths, path_count};
use dqas::device::{DeviceGraph, QubitAssignment};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn dp_matches_dfs_on_random_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..300 {
        let n = 1 + i % 6;
        let c = common::random_circuit(&mut rng, n, i % 21);
        let dag = build_dag(&c, n);
        assert_eq!(count_paths(&dag), BigUint::from(common::dfs_paths(&dag)));
        assert!(count_paths(&dag) >= BigUint::from(n));
    }
}

#[test]
fn two_cnots_in_series() {
    let c = Circuit::new(
        QubitAssignment::identity(3),
        vec![Gate::cnot(0, 1), Gate::cnot(1, 2)],
    )
    .unwrap();
    let dag = build_dag(&c, 3);
    let want = common::dfs_paths(&dag);
    assert_eq!(want, 8);
    assert_eq!(count_paths(&dag), BigUint::from(want));
}

#[test]
fn generated_circuits_on_device_wires() {
    let d = DeviceGraph::yorktown_pair();
    for seed in 0..50 {
        let c = common::generate(&d, Method::Both, 20, 6, 0.3, seed);
        let dag = build_dag(&c, d.num_qubits());
        assert_eq!(count_paths(&dag), BigUint::from(common::dfs_paths(&dag)));
    }
}

#[test]
fn sixty_gate_counts_exceed_u64() {
    // A ladder of 70 CNOTs on two wires doubles the count each time.
    let gates = (0..70).map(|_| Gate::cnot(0, 1)).collect();
    let c = Circuit::new(QubitAssignment::identity(2), gates).unwrap();
    assert_eq!(path_count(&c, 2), BigUint::from(2u32).pow(71));
}

fn gate_strategy(n: usize) -> impl Strategy<Value = (u8, usize, usize)> {
    (0u8..3, 0..n, 1..n)
}

fn build(n: usize, spec: &[(u8, usize, usize)]) -> Vec<Gate> {
    let mut slot = 0;
    spec.iter()
        .map(|&(k, a, off)| {
            let b = (a + off) % n;
            match k {
                0 => {
                    slot += 3;
                    Gate::U {
                        qubit: a,
                        slot: slot - 3,
                    }
                }
                1 => Gate::cnot(a, b),
                _ => Gate::Swap { a, b },
            }
        })
        .collect()
}

proptest! {
    #[test]
    fn dp_equals_enumeration(spec in prop::collection::vec(gate_strategy(4), 0..20)) {
        let c = Circuit::new(QubitAssignment::identity(4), build(4, &spec)).unwrap();
        let dag = build_dag(&c, 4);
        prop_assert_eq!(dag.num_nodes(), c.len() + 2);
        prop_assert_eq!(count_paths(&dag), BigUint::from(common::dfs_paths(&dag)));
    }

    #[test]
    fn appending_gates_is_monotone(
        spec in prop::collection::vec(gate_strategy(4), 0..20),
        extra in gate_strategy(4),
    ) {
        let mut gates = build(4, &spec);
        let before = path_count(&Circuit::new(QubitAssignment::identity(4), gates.clone()).unwrap(), 4);
        let slot = gates.iter().filter(|g| matches!(g, Gate::U { .. })).count() * 3;
        let (k, a, off) = extra;
        let g = match k {
            0 => Gate::U { qubit: a, slot },
            1 => Gate::cnot(a, (a + off) % 4),
            _ => Gate::Swap { a, b: (a + off) % 4 },
        };
        gates.push(g);
        let after = path_count(&Circuit::new(QubitAssignment::identity(4), gates).unwrap(), 4);
        if k == 0 {
            prop_assert_eq!(after, before);
        } else {
            prop_assert!(after >= before);
        }
    }
}
