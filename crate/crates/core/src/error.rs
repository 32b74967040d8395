//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or numerical parameter is outside its admissible domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A bin scheme violates its structural invariants.
    #[error("invalid bin scheme: {0}")]
    InvalidScheme(String),

    /// A bin probability sits at or below the probability floor.
    #[error("bin {bin} has probability {prob:e}, at or below the floor")]
    DegenerateBin { bin: usize, prob: f64 },

    /// The probability derivative vanishes, so no phase information is available.
    #[error("probability derivative vanishes: no phase sensitivity")]
    NoSensitivity,

    /// `w^T dP = 0`: the combined observable does not respond to the phase.
    #[error("weight vector is orthogonal to the probability derivative")]
    OrthogonalWeight,

    /// The calibration function is not strictly monotone on the requested grid.
    #[error(
        "calibration function is not monotone near {phi_deg:.4} deg; use a narrower phase range"
    )]
    NonMonotoneCalibration { phi_deg: f64 },

    /// The observed mean of the combined observable is outside the tabulated calibration curve.
    #[error("out of calibration range: observable mean {value} not in [{lo}, {hi}]")]
    OutOfCalibrationRange { value: f64, lo: f64, hi: f64 },

    /// The least-squares fit of the probability model did not converge.
    #[error("probability model fit failed ({reason}); best iterate alpha={alpha_hat}, r={r_hat}, residual={residual:e}")]
    FitFailed {
        reason: String,
        alpha_hat: f64,
        r_hat: f64,
        residual: f64,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn scheme(msg: impl Into<String>) -> Self {
        Error::InvalidScheme(msg.into())
    }
}
