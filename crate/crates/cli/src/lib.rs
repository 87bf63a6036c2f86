//! Command-line companion to `kickmind-core`: file formats, a scenario
//! simulator, synthetic localization logs and the `kickmind` binary.
//!
//! The library half exists so integration tests can drive the exact
//! code paths the binary uses; `cli::run` is the binary entry point.

// The `!(x > 0.0)` comparisons are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod localize;
pub mod loggen;
pub mod scenario;
pub mod sim;
pub mod svg;
pub mod valuefile;

use std::fmt;

/// Top-level error of every subcommand, mapped onto exit codes:
/// configuration and input problems exit 2, a solver that ran out of
/// iterations exits 3.
#[derive(Debug)]
pub enum CliError {
    /// Unusable input: malformed JSON, invalid parameter, missing or
    /// unreadable file, malformed binary value file.
    Config(String),
    /// Value iteration hit its iteration cap before the target
    /// residual.
    NoConvergence { residual: f64 },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::NoConvergence { residual } => {
                write!(f, "value iteration did not converge (residual {residual:.6e})")
            }
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoConvergence { .. } => 3,
        }
    }

    pub(crate) fn config(context: &str, detail: impl fmt::Display) -> Self {
        CliError::Config(format!("{context}: {detail}"))
    }
}

impl From<kickmind_core::PlannerError> for CliError {
    fn from(err: kickmind_core::PlannerError) -> Self {
        match err {
            kickmind_core::PlannerError::NoConvergence { residual } => {
                CliError::NoConvergence { residual }
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<kickmind_core::LocalizationError> for CliError {
    fn from(err: kickmind_core::LocalizationError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<kickmind_core::ClusteringError> for CliError {
    fn from(err: kickmind_core::ClusteringError) -> Self {
        CliError::Config(err.to_string())
    }
}
