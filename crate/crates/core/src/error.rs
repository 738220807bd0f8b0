use thiserror::Error;

/// Errors raised by the geometry, bound and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point lies outside the domain: {0}")]
    OutsideDomain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("Hessian lost positivity at node ({i}, {j})")]
    HessianLoss { i: usize, j: usize },
    #[error("no valid disk found: {0}")]
    NoValidDisk(String),
    #[error("certified bracket violated: {0}")]
    BracketViolation(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
