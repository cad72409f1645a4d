//! Error types shared across the crate.

use thiserror::Error;

/// Which marginal axis a failure refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalAxis {
    Row,
    Col,
}

impl std::fmt::Display for MarginalAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MarginalAxis::Row => write!(f, "row"),
            MarginalAxis::Col => write!(f, "column"),
        }
    }
}

/// Numerical breakdown while materializing or scaling a plan.
///
/// Exponents are on the natural-log scale; the guard fires well before IEEE
/// overflow so the failure is reported instead of propagating infinities.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Instability {
    #[error("exponent overflow: max log-entry {max_exponent:.3e} exceeds limit {limit}")]
    ExponentOverflow { max_exponent: f64, limit: f64 },
    #[error("{axis} marginal {index} underflowed to zero")]
    MarginalUnderflow { axis: MarginalAxis, index: usize },
}

/// Invalid input to a pure numeric operation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum DomainError {
    #[error("entry {index} is not strictly positive: {value}")]
    NonPositiveEntry { index: usize, value: f64 },
    #[error("vector sums to {sum} instead of 1 (tolerance {tol})")]
    NotNormalized { sum: f64, tol: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cost entry {index} = {value} outside [0, 1]")]
    CostOutOfRange { index: usize, value: f64 },
    #[error("non-finite entry {index}: {value}")]
    NonFiniteEntry { index: usize, value: f64 },
}

/// Failure inside a single Bregman projection.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProjectionError {
    #[error(transparent)]
    Instability(#[from] Instability),
    #[error("line search failed to bracket/accept a step: {state:?}")]
    LineSearchFailure {
        state: crate::projections::LineSearchState,
    },
}

/// Failure of an outer mirror-descent solve, annotated with the step it
/// occurred on and the step size in effect.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolveError {
    #[error("instability at MD step {step} (gamma_t = {gamma_t}): {source}")]
    Instability {
        step: usize,
        gamma_t: f64,
        source: Instability,
    },
    #[error("line search failed at MD step {step} (gamma_t = {gamma_t}): {state:?}")]
    LineSearch {
        step: usize,
        gamma_t: f64,
        state: crate::projections::LineSearchState,
    },
    #[error(
        "projection did not converge at MD step {step}: rho = {rho:.3e} after {iterations} iterations (eps = {epsilon:.3e})"
    )]
    NonConvergence {
        step: usize,
        rho: f64,
        iterations: usize,
        epsilon: f64,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

impl SolveError {
    /// Wrap a projection failure with outer-loop context.
    pub(crate) fn from_projection(err: ProjectionError, step: usize, gamma_t: f64) -> Self {
        match err {
            ProjectionError::Instability(source) => SolveError::Instability {
                step,
                gamma_t,
                source,
            },
            ProjectionError::LineSearchFailure { state } => SolveError::LineSearch {
                step,
                gamma_t,
                state,
            },
        }
    }
}
