use alloc::string::String;
use core::fmt;

/// Errors raised by the solvers and constructors in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two objects that must share an alphabet size do not.
    DimensionMismatch { expected: usize, found: usize },
    /// A vector failed the probability-vector checks.
    NotADistribution(String),
    /// A matrix failed the row-stochastic checks.
    NotAMechanism(String),
    /// An index array is not a bijection.
    InvalidPermutation(String),
    /// A source set needs at least one vertex.
    EmptySourceSet,
    /// An argument is outside the domain of the operation.
    Domain(String),
    /// The LP kernel gave up (iteration cap or a degenerate tableau).
    NumericalFailure(String),
    /// Chamber search tested more chambers than allowed.
    SearchBudgetExceeded { tested: usize, cap: usize },
    /// Brute-force enumeration would visit too many candidates.
    BudgetExceeded { candidates: u64, cap: u64 },
    /// The saddle-point solver did not reach the requested gap.
    NoConvergence { rounds: usize, gap: f64 },
    /// No row-stochastic mechanism meets the distortion budget.
    InfeasibleDistortion,
    /// The operation requires a different source class.
    WrongClass(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotADistribution(why) => write!(f, "not a distribution: {why}"),
            Error::NotAMechanism(why) => write!(f, "not a mechanism: {why}"),
            Error::InvalidPermutation(why) => write!(f, "invalid permutation: {why}"),
            Error::EmptySourceSet => f.write_str("source set has no vertices"),
            Error::Domain(why) => write!(f, "domain error: {why}"),
            Error::NumericalFailure(why) => write!(f, "numerical failure: {why}"),
            Error::SearchBudgetExceeded { tested, cap } => {
                write!(f, "chamber search exceeded its budget ({tested} > {cap})")
            }
            Error::BudgetExceeded { candidates, cap } => {
                write!(f, "enumeration budget exceeded ({candidates} > {cap})")
            }
            Error::NoConvergence { rounds, gap } => {
                write!(f, "no convergence after {rounds} rounds (gap {gap:.3e})")
            }
            Error::InfeasibleDistortion => f.write_str("no mechanism satisfies the distortion budget"),
            Error::WrongClass(what) => write!(f, "wrong source class: {what}"),
        }
    }
}

impl core::error::Error for Error {}
