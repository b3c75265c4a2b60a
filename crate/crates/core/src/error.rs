use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("limit for k = {k} did not converge within {iterations} iterations")]
    LimitNotConverged { k: usize, iterations: usize },

    #[error("series truncated at kmax = {kmax}: last term {last_term:e} exceeds tolerance {tol:e}")]
    TruncationTail { kmax: usize, last_term: f64, tol: f64 },

    #[error("linear solve residual {residual:e} exceeds {limit:e}")]
    Conditioning { residual: f64, limit: f64 },

    #[error("singular system at pivot {0}")]
    Singular(usize),

    #[error("transition matrix entry ({row}, {col}) = {value:e} is negative beyond tolerance")]
    NegativeProbability { row: usize, col: usize, value: f64 },

    #[error("transition matrix row {row} sums to {sum} instead of 1")]
    RowSum { row: usize, sum: f64 },

    #[error("matrix exponential failed its semigroup self-test (defect {defect:e})")]
    AccuracyContract { defect: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
