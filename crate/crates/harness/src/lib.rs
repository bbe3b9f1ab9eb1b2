//! Experiment runner for the surface growth verification pipeline.
//!
//! * [`config`]: the TOML experiment schema.
//! * [`run`]: one experiment end to end, writing CSV series and `summary.json`.
//! * [`table`]: many experiments in parallel, summarised as a table.
//! * [`plot`]: plot-ready, downsampled CSVs from a finished run.

use std::path::{Path, PathBuf};

pub mod config;
pub mod plot;
pub mod run;
pub mod table;

pub use config::{ExperimentConfig, Overrides};
pub use run::{run, Report, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("config key `{key}`: {msg}")]
    InvalidKey { key: String, msg: String },
    #[error("run needs {steps} solver steps; pass --long to allow more than {}", run::LONG_STEP_LIMIT)]
    TooLong { steps: usize },
    #[error("missing run artifact {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] surfverify_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
