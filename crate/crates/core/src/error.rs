use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `theta_i > 0` on a coordinate where the point vanishes; the functional is `-inf` there.
    #[error("functional undefined: theta[{index}] > 0 but |z_{index}| = 0")]
    Domain { index: usize },

    /// Evaluation requested on the boundary `theta_i = 0` where the gradient blows up.
    #[error("boundary direction: theta[{index}] = 0")]
    Boundary { index: usize },

    #[error("point lies in the closed unit ball (polynomial hull)")]
    InsideHull,

    #[error("no convergence after {iterations} iterations (kkt residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        best_theta: Vec<f64>,
        best_value: f64,
    },

    #[error(
        "series truncated too early: estimated tail {tail:e} vs value {value:e} at cutoff {cutoff}"
    )]
    Truncation {
        cutoff: usize,
        tail: f64,
        value: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("resource cap exceeded: {what} = {value} > {cap}")]
    ResourceCap {
        what: &'static str,
        value: usize,
        cap: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
