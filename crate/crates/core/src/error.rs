use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum SvarError {
    /// A running pivot of the unitriangular LU factorization vanished.
    /// `index` is the 1-based order of the first singular leading principal minor.
    #[error("leading principal minor {index} is singular (pivot {pivot:e})")]
    SingularMinor { index: usize, pivot: f64 },

    #[error("eigenvalue iteration did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("panel has {rows} rows but lag order {p} needs at least {}", p + 1)]
    TooShort { rows: usize, p: usize },

    #[error("design matrix is numerically singular (reciprocal condition {rcond:e})")]
    SingularDesign { rcond: f64 },

    #[error("column index {index} outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid column selection: {0}")]
    InvalidSelection(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("variance at coordinate {index} is negative ({value:e})")]
    NegativeVariance { index: usize, value: f64 },

    #[error("weighted variance {value:e} is degenerate; the weight lies in the null space of the covariance")]
    DegenerateVariance { value: f64 },

    #[error("strictly lower-triangular sub-vector is empty for k = {k}")]
    EmptySubvector { k: usize },

    #[error("simulated path exploded at period {period}")]
    ExplodedPath { period: usize },

    #[error("percent change of series '{series}' needs positive levels (row {row})")]
    NonPositiveLevel { series: String, row: usize },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}:{line}: dates are not strictly increasing", path.display())]
    NonMonotoneDates { path: PathBuf, line: usize },

    #[error("{}:{line}: missing value in column '{column}'", path.display())]
    MissingValues {
        path: PathBuf,
        line: usize,
        column: String,
    },

    #[error("identification failed in {failures} of {reps} replications")]
    IdentificationRate { failures: usize, reps: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SvarError {
    /// Process exit code of the command-line tool for this error.
    ///
    /// 2 is a configuration problem, 3 a numerical or identification
    /// failure, 4 an input/output problem.
    pub fn exit_code(&self) -> u8 {
        use SvarError::*;
        match self {
            Config(_)
            | InvalidSelection(_)
            | IndexOutOfRange { .. }
            | TooShort { .. }
            | NonPositiveLevel { .. }
            | EmptySubvector { .. }
            | DimensionMismatch(_) => 2,
            SingularMinor { .. }
            | NoConvergence(_)
            | SingularDesign { .. }
            | NonFinite(_)
            | NegativeVariance { .. }
            | DegenerateVariance { .. }
            | ExplodedPath { .. }
            | IdentificationRate { .. } => 3,
            Parse { .. } | NonMonotoneDates { .. } | MissingValues { .. } | Io(_) | Json(_)
            | Csv(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, SvarError>;
