//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid or run parameters are structurally invalid.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Input data violates a model invariant (e.g. negative density sample).
    #[error("validation error: {0}")]
    Validation(String),

    /// Operation requires a regular process but the model is deterministic.
    #[error("regularity error: the spectral model is deterministic (Szego integral {szego_value})")]
    Deterministic { szego_value: f64 },

    /// Spectral factorization failed its own invariants.
    #[error("factorization failure: {0}")]
    Factorization(String),

    /// Argument outside the operation's domain (e.g. lag <= 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// Covariance did not decay inside the available truncation window.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// Not enough samples to carry out the requested transform.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Innovation coverage does not span the predictor kernel.
    #[error("window error: missing innovation coverage over {0}")]
    Window(String),

    /// Normal-equations matrix too ill-conditioned even after jitter escalation.
    #[error("ill-conditioned system: {message} (jitter trace: {jitter_trace:?})")]
    IllConditioned {
        message: String,
        jitter_trace: Vec<f64>,
    },

    /// Caller combined incompatible objects (e.g. mismatched lags in compare).
    #[error("usage error: {0}")]
    Usage(String),

    /// Every frequency sample was masked; the quotient is undefined.
    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
