//! VQE training of candidate circuits with multi-restart Adam.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::hamiltonian::PauliHamiltonian;
use crate::simulator::{LogicalProgram, SimError};

#[derive(Debug, Error)]
pub enum VqeError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub n_restarts: usize,
    pub accuracy_threshold: f64,
    /// Stop a restart early once within `accuracy_threshold` of this energy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_energy: Option<f64>,
    pub convergence_window: usize,
    pub convergence_tol: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            max_iters: 10_000,
            n_restarts: 10,
            accuracy_threshold: 0.0016,
            target_energy: None,
            convergence_window: 50,
            convergence_tol: 1e-8,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), VqeError> {
        let bad = |m: &str| Err(VqeError::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.max_iters == 0 || self.n_restarts == 0 || self.convergence_window == 0 {
            return bad("max_iters, n_restarts and convergence_window must be positive");
        }
        let positive = |x: f64| x > 0.0;
        if !positive(self.accuracy_threshold) || !positive(self.convergence_tol) {
            return bad("accuracy_threshold and convergence_tol must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam moment decay rates must lie in [0, 1)");
        }
        if !positive(self.epsilon) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Accuracy,
    Converged,
    MaxIters,
    NoParameters,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartResult {
    pub best_energy: f64,
    pub best_params: Vec<f64>,
    pub initial_energy: f64,
    pub iterations: usize,
    pub stop: StopReason,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub best_energy: f64,
    pub best_params: Vec<f64>,
    pub restart_energies: Vec<f64>,
    pub iterations_used: Vec<usize>,
    pub solved: bool,
}

pub fn energy_and_gradient(
    circuit: &Circuit,
    params: &[f64],
    h: &PauliHamiltonian,
) -> Result<(f64, Vec<f64>), SimError> {
    LogicalProgram::compile(circuit)?.energy_and_gradient(params, h)
}

/// One Adam descent from `init`. Returns the best energy seen along the way.
pub fn adam_descent(
    program: &LogicalProgram,
    h: &PauliHamiltonian,
    cfg: &TrainConfig,
    init: Vec<f64>,
) -> Result<RestartResult, VqeError> {
    let solved = |e: f64| {
        cfg.target_energy
            .is_some_and(|t| e - t <= cfg.accuracy_threshold)
    };
    let mut theta = init;
    if theta.is_empty() {
        let (e, _) = program.energy_and_gradient(&theta, h)?;
        return Ok(RestartResult {
            best_energy: e,
            best_params: theta,
            initial_energy: e,
            iterations: 0,
            stop: StopReason::NoParameters,
        });
    }
    let k = theta.len();
    let (mut m, mut v) = (vec![0.0; k], vec![0.0; k]);
    let (mut b1t, mut b2t) = (1.0, 1.0);
    let mut best = f64::INFINITY;
    let mut best_params = theta.clone();
    let mut initial = f64::NAN;
    // best[i] = best energy after i + 1 evaluations
    let mut trace: Vec<f64> = Vec::with_capacity(cfg.max_iters);
    let mut stop = StopReason::MaxIters;

    for it in 0..cfg.max_iters {
        let (e, g) = program.energy_and_gradient(&theta, h)?;
        if it == 0 {
            initial = e;
        }
        if e < best {
            best = e;
            best_params.copy_from_slice(&theta);
        }
        trace.push(best);
        if solved(best) {
            stop = StopReason::Accuracy;
            break;
        }
        if trace.len() > cfg.convergence_window {
            let before = trace[trace.len() - 1 - cfg.convergence_window];
            if before - best < cfg.convergence_tol {
                stop = StopReason::Converged;
                break;
            }
        }
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        for j in 0..k {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            let mh = m[j] / (1.0 - b1t);
            let vh = v[j] / (1.0 - b2t);
            theta[j] -= cfg.learning_rate * mh / (vh.sqrt() + cfg.epsilon);
        }
    }
    Ok(RestartResult {
        best_energy: best,
        best_params,
        initial_energy: initial,
        iterations: trace.len(),
        stop,
    })
}

/// Per-restart seeds are drawn from `rng` up front so restarts can run in parallel.
pub fn train_query<R: Rng + ?Sized>(
    circuit: &Circuit,
    h: &PauliHamiltonian,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<QueryResult, VqeError> {
    cfg.validate()?;
    let program = LogicalProgram::compile(circuit)?;
    if h.n_qubits() != program.n_qubits {
        return Err(SimError::Dimension {
            expected: program.n_qubits,
            got: h.n_qubits(),
        }
        .into());
    }
    let seeds: Vec<u64> = (0..cfg.n_restarts).map(|_| rng.next_u64()).collect();
    let restarts = seeds
        .par_iter()
        .map(|&s| {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            let init = (0..program.n_params)
                .map(|_| r.random::<f64>() * TAU)
                .collect();
            adam_descent(&program, h, cfg, init)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(restarts, cfg))
}

pub fn summarize(restarts: Vec<RestartResult>, cfg: &TrainConfig) -> QueryResult {
    let best = restarts
        .iter()
        .min_by(|a, b| a.best_energy.total_cmp(&b.best_energy))
        .expect("at least one restart");
    QueryResult {
        best_energy: best.best_energy,
        best_params: best.best_params.clone(),
        restart_energies: restarts.iter().map(|r| r.best_energy).collect(),
        iterations_used: restarts.iter().map(|r| r.iterations).collect(),
        solved: cfg
            .target_energy
            .is_some_and(|t| best.best_energy - t <= cfg.accuracy_threshold),
    }
}
