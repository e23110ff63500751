use thiserror::Error;

use crate::mms::RateTable;
use crate::problem::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("fields live on different grids ({0})")]
    GridMismatch(String),

    #[error("{0}")]
    InvalidConstant(String),

    #[error("structural assumptions violated at {} location(s); first: {}", .0.len(), .0[0])]
    Bounds(Vec<Violation>),

    #[error("degeneracy offset must be positive, found {value} at node {node}")]
    NonPositiveOffset { node: usize, value: f64 },

    #[error("face averaging needs a positive nodal coefficient, found {value} at node {node}")]
    NonPositiveCoefficient { node: usize, value: f64 },

    #[error("dimension mismatch: operator has {expected} unknowns, vector has {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("conjugate gradients stopped after {iterations} iterations with relative residual {residual:e}")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("fixed-point iteration did not converge in {} iterations (damping halved {halvings} times, last difference {:e})", .history.len(), .history.last().copied().unwrap_or(f64::NAN))]
    FixedPoint { history: Vec<f64>, halvings: u32 },

    #[error("ladder rung n = {n}: {source}")]
    Rung {
        n: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid ladder schedule: {0}")]
    Schedule(String),

    #[error("manufactured case rejected: {0}")]
    ManufacturedCase(String),

    #[error("convergence study aborted after {} resolution(s): {source}", .partial.rows.len())]
    StudyAborted {
        partial: Box<RateTable>,
        #[source]
        source: Box<Error>,
    },

    #[error("field file line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
