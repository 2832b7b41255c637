use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A primitive was evaluated outside of its domain, e.g. `ln` of a
    /// nonpositive number or a defining function at an excluded point.
    #[error("domain error in `{primitive}`: {detail}")]
    Domain {
        primitive: &'static str,
        detail: String,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("gradient vanishes at {0:?}")]
    VanishingGradient(Vec<f64>),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The Richardson error indicator of a finite-difference derivative
    /// exceeded the caller's tolerance.
    #[error("finite-difference error indicator {indicator:e} exceeds tolerance {tolerance:e}")]
    FiniteDifference { indicator: f64, tolerance: f64 },

    /// η₂ at or below the worm threshold π/(2(π−β)), or β ≥ π.
    #[error("eta2 = {eta2} is not above the threshold {threshold} for beta = {beta}")]
    Threshold {
        beta: f64,
        eta2: f64,
        threshold: f64,
    },

    #[error("cot pole: argument {argument} is within 1e-12 of a multiple of pi")]
    Singularity { argument: f64 },

    #[error("Riccati trajectory blew up near t = {t} (|s| = {s:e})")]
    PoleCrossing { t: f64, s: f64 },

    /// A step of the convexification could not satisfy one of its
    /// inequalities; the message names the inequality.
    #[error("convexification failed: {0}")]
    Convexify(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(primitive: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        primitive,
        detail: detail.into(),
    }
}

pub(crate) fn invalid(name: &'static str, detail: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        detail: detail.into(),
    }
}
