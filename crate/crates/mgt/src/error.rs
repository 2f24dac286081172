use thiserror::Error;

use crate::config::Regime;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum MgtError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("regime mismatch: operation requires {required:?}, got {found:?}")]
    RegimeMismatch { required: Regime, found: Regime },

    #[error(
        "support cone reached the domain boundary at t = {t}: need r_max >= {needed_r_max}, have {r_max}"
    )]
    ConeViolation {
        t: f64,
        needed_r_max: f64,
        r_max: f64,
    },

    #[error("trace too short: {0}")]
    TraceTooShort(String),

    #[error("quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("not enough usable records: {0}")]
    InsufficientRecords(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MgtError>;
