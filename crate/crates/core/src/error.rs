//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violated its domain.
    #[error("invalid input: {message}")]
    InvalidInput { message: String },

    /// Grids passed to cooperating operations do not agree.
    #[error("grid mismatch: {message}")]
    GridMismatch { message: String },

    /// The joint driver covariance could not be factorized even after one
    /// ridge regularization pass.
    #[error(
        "covariance factorization failed for {dim}-point grid at H={hurst}: \
         matrix is numerically non-positive-definite (ridge retry exhausted)"
    )]
    CovarianceNotPd { dim: usize, hurst: f64 },

    /// A simulated log-price became non-finite.
    #[error("non-finite log-price for asset {asset} at step {step} (path {path})")]
    NonFinitePath {
        asset: usize,
        step: usize,
        path: usize,
    },

    /// An option price fell outside its static no-arbitrage bounds, so no
    /// implied volatility exists. Carries the violated bound.
    #[error("price {price} violates {side} arbitrage bound {bound} (forward {forward}, log-strike {log_strike})")]
    ArbitrageBound {
        side: BoundSide,
        bound: f64,
        price: f64,
        forward: f64,
        log_strike: f64,
    },

    /// Too few usable points for a fit or classification.
    #[error("insufficient data: {message}")]
    InsufficientData { message: String },

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure: {message}")]
    Numerical { message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

impl std::fmt::Display for BoundSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundSide::Lower => write!(f, "lower"),
            BoundSide::Upper => write!(f, "upper"),
        }
    }
}

pub(crate) fn invalid(message: impl Into<String>) -> Error {
    Error::InvalidInput {
        message: message.into(),
    }
}
