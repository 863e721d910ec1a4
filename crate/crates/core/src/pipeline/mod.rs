//! The two-stage training-free search: generate, rank by path count, rank by
//! expressibility, then train candidates in order. Every stage persists its
//! scoreboard under the output directory and a rerun resumes where it stopped.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::circuitgen::GenError;
use crate::expressibility::ExprError;
use crate::hamiltonian::HamiltonianError;
use crate::vqe::VqeError;

pub mod config;
pub mod report;
pub mod run;
pub mod store;

pub use config::{PipelineConfig, TaskConfig, TaskKind};
pub use report::{build_report, write_report, PipelineReport};
pub use run::{run, run_pipeline, RunOptions, RunStatus};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error(
        "{dir} holds a run with config fingerprint {found}, but the current config has {expected}; \
         use a fresh output_dir or delete the old one"
    )]
    FingerprintMismatch {
        dir: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: corrupt record: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    MissingState(String),
    #[error("circuit {id}: generation failed: {source}")]
    Generation {
        id: usize,
        #[source]
        source: GenError,
    },
    #[error("circuit {id}: expressibility failed: {source}")]
    Expressibility {
        id: usize,
        #[source]
        source: ExprError,
    },
    #[error("circuit {id}: training failed: {source}")]
    Training {
        id: usize,
        #[source]
        source: VqeError,
    },
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("cannot start worker pool: {0}")]
    Workers(String),
}

impl PipelineError {
    /// Whether the failure is the user's configuration rather than the run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            PipelineError::Config(_) | PipelineError::FingerprintMismatch { .. }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Generate = 1,
    Paths = 2,
    Expressibility = 3,
    Train = 4,
}

impl Stage {
    pub const ALL: [Stage; 4] = [
        Stage::Generate,
        Stage::Paths,
        Stage::Expressibility,
        Stage::Train,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Paths => "paths",
            Stage::Expressibility => "expressibility",
            Stage::Train => "train",
        }
    }

    pub fn file(self) -> &'static str {
        match self {
            Stage::Generate => store::STAGE1,
            Stage::Paths => store::STAGE2,
            Stage::Expressibility => store::STAGE3,
            Stage::Train => store::STAGE4,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}
