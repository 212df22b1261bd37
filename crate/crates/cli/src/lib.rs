//! Experiment harness around the `ciuv` crate: scenario configuration,
//! seeded trial sweeps over synthetic worlds, and the result files.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{ScenarioConfig, Sweep};
pub use experiment::{run_experiment, run_trial, Experiment, Method, ResultRow, TrialResult};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("malformed results file: {0}")]
    Format(String),

    #[error(transparent)]
    Core(#[from] ciuv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
