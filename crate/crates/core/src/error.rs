use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("order {order} exceeds the supported maximum {max}")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("kernel {0} is not supported by this operation")]
    UnsupportedKernel(String),

    #[error("signals are not sampled on the same time grid")]
    GridMismatch,

    #[error("window is not unit-norm (quadrature norm {norm})")]
    WindowNotNormalized { norm: f64 },

    #[error("point {0} lies outside the supported range")]
    OutOfRange(String),

    #[error("draws are not independent (identical keys)")]
    DependentDraws,

    #[error("all coefficients of the draw are zero")]
    DegenerateDraw,

    #[error("argument-principle oracle did not converge after {nodes} nodes")]
    OracleFailure { nodes: usize },

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("closed-form and finite-difference covariance differ by {deviation:e}")]
    CovarianceInconsistent { deviation: f64 },

    #[error("{excluded} of {total} realizations excluded, above the allowed fraction")]
    TooManyExclusions { excluded: usize, total: usize },

    #[error("basin report rejected: unresolved fraction {fraction:.4}")]
    BasinRejected { fraction: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
