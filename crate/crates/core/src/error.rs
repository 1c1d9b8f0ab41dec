use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fixed-point iteration for word {word:?} did not converge after {iterations} steps")]
    NoConvergence { word: Vec<usize>, iterations: usize },

    #[error("enumeration of {requested} periodic points exceeds the cap of {cap}")]
    CapExceeded { requested: u128, cap: u128 },

    #[error("leading eigenvalue rejected: {0}")]
    LeadingEigenvalue(String),

    #[error("eigen-solver failure: {0}")]
    EigenSolver(String),

    #[error("irrep belongs to {irrep} but the skew function takes values in {group}")]
    GroupMismatch { irrep: String, group: String },

    #[error("|zeta| = {modulus} lies outside the series trust radius {radius}")]
    OutsideTrustRegion { modulus: f64, radius: f64 },

    #[error("determinant vanishes near the contour: {0}")]
    ZeroOnContour(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical check failed: {0}")]
    CheckFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
