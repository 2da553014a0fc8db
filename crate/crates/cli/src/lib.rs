//! Command-line front end: configuration, event CSV ingestion, synthetic
//! data generation, and JSON/CSV emission for the fit, generate, tune,
//! evaluate and compare commands.
//!
//! Exit codes: 0 success, 1 internal error, 2 input error (bad
//! configuration, unreadable or malformed input), 3 non-convergence
//! (estimation stopped at its sample cap, or cross-entropy stalled).

pub mod commands;
pub mod config;
pub mod io;

use pwaccel::accel_eval::EvalError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::NotConverged(_) => 3,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::NoProgress { .. } => CliError::NotConverged(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}
