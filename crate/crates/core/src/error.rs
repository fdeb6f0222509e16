use thiserror::Error;

/// Errors raised by the numerical stages of the recovery pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A point lies exactly on a singularity of a map or model.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The Fourier coefficients do not reach the order a Hankel system needs.
    #[error("need Fourier coefficients up to order {needed}, only {available} available")]
    InsufficientCoefficients { needed: usize, available: usize },

    /// The residue design matrix is numerically rank deficient.
    #[error("residue design matrix is rank deficient (condition estimate {condition:e})")]
    RankDeficient { condition: f64 },

    #[error("degenerate polynomial: all coefficients vanish")]
    DegeneratePolynomial,

    #[error("sample set does not fit this operation: {0}")]
    SampleMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
