//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the solvers and validators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input failed a shape or domain check.
    #[error("invalid input: {0}")]
    Validation(String),
    /// An iteration did not converge, usually because a transition matrix is not stable.
    #[error("iteration did not converge: {0}")]
    NonConvergent(String),
    /// A numerical routine produced a non-finite or stalled result.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// The lag-zero autocovariance is singular or badly conditioned.
    #[error("lag-zero autocovariance is singular (condition number {condition:.3e})")]
    SingularGamma0 {
        /// Estimated condition number.
        condition: f64,
    },
    /// A transformed autocovariance lost rank.
    #[error("transformed autocovariance is rank deficient (condition number {condition:.3e})")]
    RankDeficient {
        /// Estimated condition number.
        condition: f64,
    },
    /// The exponential-ergodicity inequality fails at some lag.
    #[error("process is not exponentially ergodic (first violation at lag {lag})")]
    NotExponentiallyErgodic {
        /// First lag with a negative margin.
        lag: usize,
    },
    /// The lag-one autocovariance is not symmetric.
    #[error("lag-one autocovariance is asymmetric (norm of asymmetry {norm:.3e})")]
    AsymmetricGamma1 {
        /// Frobenius norm of the antisymmetric part.
        norm: f64,
    },
    /// Requested state dimension is outside `1..=n`.
    #[error("invalid state dimension d = {d} for n = {n} observables")]
    InvalidD {
        /// Requested dimension.
        d: usize,
        /// Observable dimension.
        n: usize,
    },
    /// A reconstructed model violates its invariants.
    #[error("invalid solution: {0}")]
    InvalidSolution(String),
    /// The model assigns zero density where the truth has mass.
    #[error("subjective support does not cover the true support")]
    SupportMismatch,
    /// A fixed-point solver failed; carries the residual history.
    #[error("fixed point not found (final residual {residual:.3e})")]
    NoConvergence {
        /// Final residual norm.
        residual: f64,
        /// Residual norm after each outer step.
        trace: Vec<f64>,
    },
    /// A post-solution check failed.
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    /// The conditioning covariance in the forward-guidance algebra is singular.
    #[error("conditioning covariance is singular (condition number {condition:.3e})")]
    SingularOmegaCov {
        /// Estimated condition number.
        condition: f64,
    },
    /// A linear law of motion is not stable.
    #[error("law of motion is unstable (spectral radius {radius:.6})")]
    UnstableLaw {
        /// Spectral radius of the transition.
        radius: f64,
    },
    /// The loading matrix does not have full row rank.
    #[error("loading matrix is rank deficient")]
    RankDeficientH,
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "Validation",
            Error::NonConvergent(_) => "NonConvergent",
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::SingularGamma0 { .. } => "SingularGamma0",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NotExponentiallyErgodic { .. } => "NotExponentiallyErgodic",
            Error::AsymmetricGamma1 { .. } => "AsymmetricGamma1",
            Error::InvalidD { .. } => "InvalidD",
            Error::InvalidSolution(_) => "InvalidSolution",
            Error::SupportMismatch => "SupportMismatch",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::VerificationFailed(_) => "VerificationFailed",
            Error::SingularOmegaCov { .. } => "SingularOmegaCov",
            Error::UnstableLaw { .. } => "UnstableLaw",
            Error::RankDeficientH => "RankDeficientH",
        }
    }
}

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
