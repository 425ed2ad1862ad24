use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature did not converge on [{lo}, {hi}]: residual {residual:e} above tolerance {tolerance:e}")]
    QuadratureNonConvergence {
        lo: f64,
        hi: f64,
        residual: f64,
        tolerance: f64,
    },

    #[error("density `{name}` rejected: {reason}")]
    InvalidDensity { name: String, reason: String },

    #[error("density vanishes at entry ({row}, {col}), argument {argument}")]
    DensityZero {
        row: usize,
        col: usize,
        argument: f64,
    },

    #[error("{what}: exhaustive enumeration refused for N = {n} (limit {limit})")]
    EnumerationTooLarge {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    /// Carries the admissible threshold so callers can clip parameter grids.
    #[error("{quantity} undefined at omega = {omega}: requires omega < {threshold}")]
    Domain {
        quantity: &'static str,
        omega: f64,
        threshold: f64,
    },

    #[error("log-det factor {factor} <= 0 at eigenvalue {eigenvalue}")]
    NonPositiveFactor { eigenvalue: f64, factor: f64 },

    #[error("cycle enumeration refused: about {estimate:e} cycles exceeds limit {limit:e}")]
    TooManyCycles { estimate: f64, limit: f64 },

    #[error("estimated cost of {estimate:e} density evaluations exceeds ceiling {ceiling:e}")]
    BudgetExceeded { estimate: f64, ceiling: f64 },

    #[error("only {got} samples available, at least {need} required")]
    InsufficientSamples { got: usize, need: usize },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("eigenvalue iteration failed to converge")]
    EigenNonConvergence,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
