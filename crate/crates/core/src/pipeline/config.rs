use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::circuit::Method;
use crate::device::DeviceGraph;
use crate::expressibility::ExprConfig;
use crate::hamiltonian::{build_heisenberg, build_tfim, PauliHamiltonian};
use crate::vqe::TrainConfig;

pub const DEFAULT_GATE_DISTS: [[f64; 3]; 3] = [[0.4, 0.2, 0.4], [0.5, 0.25, 0.25], [0.6, 0.3, 0.1]];
pub const DEFAULT_P_NONLOCAL: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Tfim,
    Heisenberg,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub kind: TaskKind,
    /// Chain length; defaults to `n_logical`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default = "yes")]
    pub periodic: bool,
    /// Hamiltonian file for `kind = "file"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

fn default_gate_dists() -> Vec<[f64; 3]> {
    DEFAULT_GATE_DISTS.to_vec()
}

fn default_p_nonlocal() -> Vec<f64> {
    DEFAULT_P_NONLOCAL.to_vec()
}

/// Relative paths are resolved against the directory holding the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
    pub n_gates: usize,
    pub method: Method,
    pub n_logical: usize,
    /// Topology file; the two-Yorktown device when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<PathBuf>,
    pub k_all: usize,
    pub k_paths: usize,
    pub k_expr: usize,
    /// Queries to run; `min(k_expr, 200)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_budget: Option<usize>,
    /// Stop querying once this many candidates have solved the task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_after_solutions: Option<usize>,
    /// Worker threads; 0 picks the number of cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_gate_dists")]
    pub gate_dists: Vec<[f64; 3]>,
    #[serde(default = "default_p_nonlocal")]
    pub p_nonlocal_choices: Vec<f64>,
    pub task: TaskConfig,
    #[serde(default)]
    pub expressibility: ExprConfig,
    #[serde(default)]
    pub train: TrainConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: Self =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let Some(d) = self.device.as_mut() {
            fix(d);
        }
        if let Some(p) = self.task.path.as_mut() {
            fix(p);
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(self.k_all >= self.k_paths && self.k_paths >= self.k_expr && self.k_expr >= 1) {
            return bad(format!(
                "need k_all >= k_paths >= k_expr >= 1, got {} / {} / {}",
                self.k_all, self.k_paths, self.k_expr
            ));
        }
        if self.n_gates == 0 {
            return bad("n_gates must be positive".into());
        }
        if self.n_logical == 0 {
            return bad("n_logical must be positive".into());
        }
        if self.gate_dists.is_empty() || self.p_nonlocal_choices.is_empty() {
            return bad("gate_dists and p_nonlocal_choices must be non-empty".into());
        }
        for d in &self.gate_dists {
            if d.iter().any(|p| !(0.0..=1.0).contains(p))
                || (d.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return bad(format!(
                    "gate distribution {d:?} is not a probability triple"
                ));
            }
        }
        for p in &self.p_nonlocal_choices {
            if !(0.0..=1.0).contains(p) {
                return bad(format!("p_nonlocal {p} is outside [0, 1]"));
            }
        }
        if self.query_budget == Some(0) {
            return bad("query_budget must be positive".into());
        }
        if self.expressibility.n_samples == 0 || self.expressibility.n_bins == 0 {
            return bad("expressibility n_samples and n_bins must be positive".into());
        }
        if self.task.kind == TaskKind::File && self.task.path.is_none() {
            return bad("task kind \"file\" needs a path".into());
        }
        if self.task.kind != TaskKind::File {
            let n = self.task.n.unwrap_or(self.n_logical);
            if n < 2 || n != self.n_logical {
                return bad(format!(
                    "{:?} task needs n >= 2 sites matching n_logical {}, got {n}",
                    self.task.kind, self.n_logical
                ));
            }
        }
        if self.train.target_energy.is_some() {
            return bad("train.target_energy is computed from the task; do not set it".into());
        }
        self.train
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn query_budget(&self) -> usize {
        self.query_budget
            .unwrap_or(self.k_expr.min(200))
            .min(self.k_expr)
    }

    pub fn load_device(&self) -> Result<DeviceGraph, PipelineError> {
        match &self.device {
            None => Ok(DeviceGraph::yorktown_pair()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    PipelineError::Config(format!("cannot read device {}: {e}", p.display()))
                })?;
                DeviceGraph::from_toml_str(&text).map_err(|e| PipelineError::Config(e.to_string()))
            }
        }
    }

    pub fn load_hamiltonian(&self) -> Result<PauliHamiltonian, PipelineError> {
        let n = self.task.n.unwrap_or(self.n_logical);
        let h = match self.task.kind {
            TaskKind::Tfim => build_tfim(n, self.task.periodic),
            TaskKind::Heisenberg => build_heisenberg(n, self.task.periodic),
            TaskKind::File => {
                let p = self.task.path.as_ref().expect("validated");
                let text = std::fs::read_to_string(p).map_err(|e| {
                    PipelineError::Config(format!("cannot read hamiltonian {}: {e}", p.display()))
                })?;
                PauliHamiltonian::from_text(&text)
            }
        }
        .map_err(|e| PipelineError::Config(e.to_string()))?;
        if h.n_qubits() != self.n_logical {
            return Err(PipelineError::Config(format!(
                "task acts on {} qubits but n_logical is {}",
                h.n_qubits(),
                self.n_logical
            )));
        }
        Ok(h)
    }

    /// Hash of everything that affects results: excludes `workers` and
    /// `output_dir`, includes device and Hamiltonian contents.
    pub fn fingerprint(&self, device: &DeviceGraph, h: &PauliHamiltonian) -> String {
        let mut c = self.clone();
        c.workers = 0;
        c.output_dir = PathBuf::new();
        c.device = None;
        if let Some(p) = c.task.path.as_mut() {
            *p = PathBuf::new();
        }
        let mut hasher = Sha256::new();
        hasher.update(c.to_toml_string());
        hasher.update(device.to_toml_string());
        hasher.update(h.to_text());
        hasher
            .finalize()
            .iter()
            .take(16)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
