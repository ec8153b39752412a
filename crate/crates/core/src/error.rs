use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("{0} is not differentiable; the dual criterion needs a smooth φ")]
    UnsupportedDivergence(&'static str),

    #[error("q > 0 where p = 0 at grid node {node}: q is not absolutely continuous with respect to p")]
    AbsoluteContinuity { node: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("copula argument on the boundary of the unit square: ({u}, {v})")]
    Boundary { u: f64, v: f64 },

    #[error("only {survivors} points survive truncation at threshold {threshold:.3e}; reduce nu")]
    OverTruncation { survivors: usize, threshold: f64 },

    #[error("density estimate {value:.3e} fell below half the truncation threshold {threshold:.3e}")]
    TruncationViolation { value: f64, threshold: f64 },

    #[error("the estimated variance of the dual criterion is zero")]
    DegenerateVariance,

    #[error("constraint violated: {0}")]
    Constraint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
