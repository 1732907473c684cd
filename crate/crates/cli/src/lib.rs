//! Experiment driver for `sinr-sched`: parses configs, builds instances and
//! rate vectors, runs sweeps over efficiency ratios and seeds, and writes
//! per-run traces plus a summary table as CSV.

pub mod config;
pub mod experiment;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{parse_config, ExperimentSpec, InstanceSource, Layer, Origin, PowerKind};
pub use experiment::{measured_threshold, run_experiment, ExperimentReport, SummaryRow};

/// A rejected setting, with where it came from.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{origin}: {}{msg}", if field.is_empty() { String::new() } else { format!("{field}: ") })]
pub struct ConfigError {
    pub origin: Origin,
    pub field: String,
    pub msg: String,
}

impl ConfigError {
    pub fn new(origin: Origin, field: &str, msg: impl Into<String>) -> Self {
        Self { origin, field: field.to_string(), msg: msg.into() }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid run setup: {0}")]
    Setup(String),
    #[error("instance rejected: {0}")]
    Instance(String),
    #[error("invariant violated (gamma={gamma}, seed={seed}): {msg}")]
    Invariant { gamma: f64, seed: u64, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Setup(_) => 2,
            CliError::Invariant { .. } => 3,
            CliError::Instance(_) => 4,
            CliError::Io { .. } | CliError::Csv { .. } => 1,
        }
    }
}
