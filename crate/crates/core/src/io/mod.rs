//! Configuration, persistence, and reproducibility plumbing: a flat
//! `key = value` config format with one section per concern, JSON/CSV report
//! emitters (floats at 17 significant digits), a versioned binary trajectory
//! format, and run manifests sufficient to re-run bit-identically on one
//! platform.

mod config;
mod manifest;
mod report_io;
mod runner;
mod trajectory;

pub use config::{load_config, parse_config, write_config};
pub use manifest::{DerivedScales, RunManifest};
pub use report_io::{format_g17, render_cells_csv, render_slope_csv, write_report};
pub use runner::{run_experiment_to_dir, RunOutput};
pub use trajectory::{read_trajectory, TrajectoryReader, TrajectoryWriter, TRAJECTORY_MAGIC};

use thiserror::Error;

/// Errors from the I/O layer.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown config key '{key}' at line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("config violates an invariant: {0}")]
    Invalid(String),
    #[error("refusing to overwrite existing output '{0}' without --force")]
    WouldOverwrite(std::path::PathBuf),
    #[error("bad trajectory file: {0}")]
    BadTrajectory(String),
    #[error(transparent)]
    Experiment(#[from] crate::experiments::ExperimentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
