use alloc::string::String;

/// Errors reported by the numerical kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("nonpositive diagonal entry at row {index}")]
    NonPositiveDiagonal { index: usize },
    #[error("matrix not SPD: nonpositive pivot at {index}")]
    NotSpd { index: usize },
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("{what}: size {size} exceeds budget {limit}, use an approximate matcher")]
    BudgetExceeded { what: &'static str, size: usize, limit: usize },
    #[error("aggregate of size {size} exceeds cap {cap}")]
    AggregateTooLarge { size: usize, cap: usize },
    #[error("coarse space would be empty")]
    EmptyCoarse,
    #[error("degenerate triangle {index}")]
    DegenerateTriangle { index: usize },
    #[error("weight vector became numerically zero")]
    ZeroWeight,
    #[error("smoother not convergent: symmetrized smoother is not SPD")]
    SmootherNotSpd,
    #[error("breakdown: {0}")]
    Breakdown(&'static str),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = core::result::Result<T, Error>;
