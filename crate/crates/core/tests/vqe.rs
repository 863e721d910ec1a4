mod common;

use dqas::hamiltonian::{build_heisenberg, build_tfim, PauliHamiltonian};
use dqas::simulator::{apply_circuit, expectation, LogicalProgram, Statevector};
use dqas::vqe::{adam_descent, energy_and_gradient, summarize, train_query, TrainConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn energy(c: &dqas::circuit::Circuit, p: &[f64], h: &PauliHamiltonian) -> f64 {
    let s = apply_circuit(c, p, &Statevector::zero(c.n_logical())).unwrap();
    expectation(&s, h).unwrap()
}

#[test]
fn adjoint_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let step = 1e-5;
    for case in 0..20 {
        let n = 2 + case % 4;
        let c = common::random_circuit(&mut rng, n, 8 + case);
        let h = if case % 2 == 0 {
            build_tfim(n, true).unwrap()
        } else {
            build_heisenberg(n, true).unwrap()
        };
        let p = common::random_params(&mut rng, c.n_params());
        let (e, g) = energy_and_gradient(&c, &p, &h).unwrap();
        assert!((e - energy(&c, &p, &h)).abs() < 1e-10);
        let mut fd = vec![0.0; p.len()];
        for j in 0..p.len() {
            let mut a = p.clone();
            let mut b = p.clone();
            a[j] += step;
            b[j] -= step;
            fd[j] = (energy(&c, &a, &h) - energy(&c, &b, &h)) / (2.0 * step);
        }
        let diff: f64 = g
            .iter()
            .zip(&fd)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = fd.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
        assert!(
            diff / scale < 1e-5,
            "case {case}: relative error {}",
            diff / scale
        );
    }
}

#[test]
fn energies_respect_the_variational_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let h = build_tfim(4, true).unwrap();
    let ground = h.exact_ground_energy().unwrap();
    for _ in 0..200 {
        let c = common::random_circuit(&mut rng, 4, 12);
        let p = common::random_params(&mut rng, c.n_params());
        assert!(energy(&c, &p, &h) >= ground - 1e-9);
    }
}

#[test]
fn descent_never_reports_worse_than_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let h = build_heisenberg(4, true).unwrap();
    let cfg = TrainConfig {
        max_iters: 300,
        ..TrainConfig::default()
    };
    for _ in 0..10 {
        let c = common::random_circuit(&mut rng, 4, 16);
        let program = LogicalProgram::compile(&c).unwrap();
        let init = common::random_params(&mut rng, c.n_params());
        let r = adam_descent(&program, &h, &cfg, init).unwrap();
        assert!(r.best_energy.is_finite());
        assert!(r.best_energy <= r.initial_energy);
        assert!(r.iterations <= cfg.max_iters);
        let check = energy(&c, &r.best_params, &h);
        assert!((check - r.best_energy).abs() < 1e-9);
    }
}

#[test]
fn layered_ansatz_trains_to_tfim4_ground() {
    let h = build_tfim(4, true).unwrap();
    let ground = h.exact_ground_energy().unwrap();
    let c = common::layered_circuit(4, 4);
    let cfg = TrainConfig {
        target_energy: Some(ground),
        n_restarts: 4,
        max_iters: 3000,
        ..TrainConfig::default()
    };
    let r = train_query(&c, &h, &cfg, &mut ChaCha8Rng::seed_from_u64(54)).unwrap();
    assert!(r.best_energy >= ground - 1e-9);
    assert!(r.solved, "best {} vs ground {ground}", r.best_energy);
}

#[test]
fn query_result_ignores_restart_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let h = build_tfim(3, true).unwrap();
    let c = common::random_circuit(&mut rng, 3, 10);
    let program = LogicalProgram::compile(&c).unwrap();
    let cfg = TrainConfig {
        max_iters: 100,
        target_energy: Some(h.exact_ground_energy().unwrap()),
        ..TrainConfig::default()
    };
    let restarts: Vec<_> = (0..6)
        .map(|_| {
            let init = common::random_params(&mut rng, c.n_params());
            adam_descent(&program, &h, &cfg, init).unwrap()
        })
        .collect();
    let a = summarize(restarts.clone(), &cfg);
    let mut shuffled = restarts;
    shuffled.shuffle(&mut rng);
    let b = summarize(shuffled, &cfg);
    assert_eq!(a.best_energy, b.best_energy);
    assert_eq!(a.solved, b.solved);
    let min = a
        .restart_energies
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    assert_eq!(a.best_energy, min);
}

#[test]
fn training_is_deterministic_for_a_seed() {
    let h = build_tfim(3, true).unwrap();
    let c = common::layered_circuit(3, 2);
    let cfg = TrainConfig {
        max_iters: 200,
        n_restarts: 3,
        ..TrainConfig::default()
    };
    let a = train_query(&c, &h, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let b = train_query(&c, &h, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rejects_mismatched_hamiltonian_and_bad_config() {
    let c = common::layered_circuit(3, 1);
    let h = build_tfim(4, true).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(train_query(&c, &h, &TrainConfig::default(), &mut rng).is_err());
    let bad = TrainConfig {
        learning_rate: -1.0,
        ..TrainConfig::default()
    };
    assert!(train_query(&c, &build_tfim(3, true).unwrap(), &bad, &mut rng).is_err());
}
