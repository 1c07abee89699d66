//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry: {0}")]
    NonFinite(String),

    #[error("label outside {{0,1}} at row {row}: {value}")]
    InvalidLabel { row: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An exhaustive-enumeration guard tripped. Hard error, never silent
    /// degradation: a certified report must not quietly switch to sampling.
    #[error("enumeration guard exceeded for {what}: {actual} > {limit}")]
    GuardExceeded {
        what: String,
        limit: u64,
        actual: u64,
    },

    #[error("solver did not converge after {iters} iterations (grad inf-norm {grad_norm:.3e})")]
    NonConvergence { iters: usize, grad_norm: f64 },

    #[error(
        "perfect separation suspected: coefficient norm {norm:.3e} exceeds 1e6 \
         for unregularized logistic"
    )]
    PerfectSeparation { norm: f64 },

    /// Submodularity-ratio pair with a (numerically) zero joint gain.
    #[error("submodularity ratio undefined: joint gain {denominator:.3e} is below 1e-12")]
    UndefinedRatio { denominator: f64 },

    #[error("forward-backward selection exceeded the {limit}-step budget")]
    NonTermination { limit: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
