//! File formats, tradeoff curves and reports on top of `dpleak-core`.
//!
//! Source sets are read from `{"M": .., "vertices": [[..], ..]}` and
//! mechanisms from `{"M": .., "rows": [[..], ..]}`. Curves are CSV with
//! columns `D,eps_dp,eps_dp_lower,eps_dp_upper,eps_it,k_star`.

pub mod curve;
pub mod files;
pub mod report;

use dpleak_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or invalid input file.
    #[error("{path}: {msg}")]
    Input { path: String, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(#[from] CoreError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for bad input or flags, 3 when a solver gives up, 1 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } | CliError::Usage(_) => 2,
            CliError::Solver(e) => match e {
                CoreError::NoConvergence { .. }
                | CoreError::NumericalFailure(_)
                | CoreError::BudgetExceeded { .. }
                | CoreError::SearchBudgetExceeded { .. }
                | CoreError::InfeasibleDistortion => 3,
                _ => 2,
            },
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
