//! Experiment runner for the federated PDMC engine: config files, synthetic
//! benchmark data, repeated runs and the output tree read by the plotting
//! scripts.

pub mod config;
pub mod experiment;
pub mod problem;

pub use config::{parse_config, validate_config, ExperimentConfig, ExperimentKind, PriorPlacement, SamplerKind};
pub use experiment::{privacy_report, run_experiment, run_single, RunManifest, RunOutput};
pub use problem::{Problem, ProblemData};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{origin}: line {line}, column {column}: {message}")]
    Parse { origin: String, line: usize, column: usize, message: String },

    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),

    #[error(transparent)]
    Engine(#[from] fedpdmc::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
