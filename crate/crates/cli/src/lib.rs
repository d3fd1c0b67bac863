//! Batch front end for the Monge-Ampere least-squares solver: configured
//! solve runs, benchmark tables, verification suites, and field exports.

pub mod bench;
pub mod config;
pub mod export;
pub mod solve;
pub mod verify;

use thiserror::Error;

/// Process exit codes of the `ma` binary.
pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_CONFIG_ERROR: i32 = 1;
pub const EXIT_SOLVER_FAILURE: i32 = 2;
pub const EXIT_VERIFY_FAILURE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unparseable or invalid configuration (exit 1).
    #[error("config error: {0}")]
    Config(String),
    /// The solve ran but failed or did not converge (exit 2).
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG_ERROR,
            CliError::Solver(_) => EXIT_SOLVER_FAILURE,
        }
    }
}
