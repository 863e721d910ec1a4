//! Expressibility: KL divergence between a circuit's fidelity histogram and
//! the Haar fidelity distribution `P(F) = (N-1)(1-F)^(N-2)`, `N = 2^n`.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::simulator::{LogicalProgram, SimError};

/// Added to each empirical bin probability before renormalizing.
pub const SMOOTHING: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("need at least one fidelity sample")]
    NoSamples,
    #[error("need at least one histogram bin")]
    NoBins,
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExprConfig {
    pub n_samples: usize,
    pub n_bins: usize,
}

impl Default for ExprConfig {
    fn default() -> Self {
        Self {
            n_samples: 5000,
            n_bins: 75,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpressibilityEstimate {
    pub value: f64,
    pub n_samples: usize,
    pub n_bins: usize,
}

/// Natural log of the Haar probability mass of each of `n_bins` equal bins on [0, 1].
pub fn haar_log_bin_masses(n_qubits: usize, n_bins: usize) -> Vec<f64> {
    let e = (2f64).powi(n_qubits as i32) - 1.0;
    (0..n_bins)
        .map(|k| {
            let a = k as f64 / n_bins as f64;
            let la = e * (-a).ln_1p();
            if k + 1 == n_bins {
                return la;
            }
            let b = (k + 1) as f64 / n_bins as f64;
            let lb = e * (-b).ln_1p();
            // (1-a)^e - (1-b)^e computed without cancellation.
            la + (-(lb - la).exp_m1()).ln()
        })
        .collect()
}

pub fn haar_bin_masses(n_qubits: usize, n_bins: usize) -> Vec<f64> {
    haar_log_bin_masses(n_qubits, n_bins)
        .into_iter()
        .map(f64::exp)
        .collect()
}

pub fn bin_index(f: f64, n_bins: usize) -> usize {
    ((f * n_bins as f64) as usize).min(n_bins - 1)
}

pub fn histogram(fidelities: &[f64], n_bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_bins];
    for &f in fidelities {
        counts[bin_index(f, n_bins)] += 1;
    }
    counts
}

/// `D_KL(P || Q)` for histogram counts against reference log-masses.
pub fn kl_from_counts(counts: &[u64], log_q: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let raw: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / total as f64 + SMOOTHING)
        .collect();
    let z: f64 = raw.iter().sum();
    let kl: f64 = raw
        .iter()
        .zip(log_q)
        .map(|(&r, &lq)| {
            let p = r / z;
            p * (p.ln() - lq)
        })
        .sum();
    kl.max(0.0)
}

/// Samples `n_samples` parameter pairs uniformly on [0, 2π) and histograms
/// `|<0|V(θ)^† V(θ')|0>|^2`.
pub fn estimate_expressibility<R: Rng + ?Sized>(
    circuit: &Circuit,
    cfg: &ExprConfig,
    rng: &mut R,
) -> Result<ExpressibilityEstimate, ExprError> {
    if cfg.n_samples == 0 {
        return Err(ExprError::NoSamples);
    }
    if cfg.n_bins == 0 {
        return Err(ExprError::NoBins);
    }
    let program = LogicalProgram::compile(circuit)?;
    let k = program.n_params;
    let params: Vec<f64> = (0..cfg.n_samples * 2 * k)
        .map(|_| rng.random::<f64>() * TAU)
        .collect();

    let fidelities: Vec<f64> = if k == 0 {
        vec![1.0; cfg.n_samples]
    } else {
        params
            .par_chunks(2 * k)
            .map(|pair| {
                let a = program.run(&pair[..k])?;
                let b = program.run(&pair[k..])?;
                Ok(a.fidelity(&b))
            })
            .collect::<Result<_, SimError>>()?
    };
    let counts = histogram(&fidelities, cfg.n_bins);
    let value = kl_from_counts(&counts, &haar_log_bin_masses(program.n_qubits, cfg.n_bins));
    Ok(ExpressibilityEstimate {
        value,
        n_samples: cfg.n_samples,
        n_bins: cfg.n_bins,
    })
}
