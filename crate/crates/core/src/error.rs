//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors reported by model construction, simulation and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid intervention: {0}")]
    InvalidIntervention(String),
    #[error("reward mode does not fit the model: {0}")]
    ModeMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
