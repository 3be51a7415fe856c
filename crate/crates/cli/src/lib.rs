//! Batch experiments: scenario, channel estimation, localization and metrics,
//! written as CSV tables.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod presets;

use thiserror::Error;

pub use config::{ExperimentConfig, SweepPoint};
pub use experiment::{evaluate_point, run_experiment, ExperimentOutput, PointResult, PositionRecord};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("position {id}: {source}")]
    Position { id: usize, source: momp_core::Error },
    #[error("{0}")]
    Runtime(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for anything that fails at run time.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

impl From<momp_core::Error> for CliError {
    fn from(e: momp_core::Error) -> Self {
        match e {
            momp_core::Error::Config(msg) => CliError::Config(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
