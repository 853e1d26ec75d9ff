//! Batch experiment driver: sweeps, searches, lemma checks and plots.

pub mod config;
pub mod plot;
pub mod sweep;

use thiserror::Error;

/// Exit code for a refused search budget.
pub const EXIT_BUDGET: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] permlab_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit code: 2 for budget refusals, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(permlab_core::Error::BudgetExceeded { .. }) => EXIT_BUDGET,
            _ => 1,
        }
    }
}
