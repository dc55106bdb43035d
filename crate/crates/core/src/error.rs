use thiserror::Error;

use crate::problem::Component;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("point has length {got}, problem expects {expected}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value in {component}[{index}]")]
    Evaluation { component: Component, index: usize },

    #[error("{component} has shape {got:?}, expected {expected:?}")]
    Shape {
        component: Component,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("unknown problem `{name}` (available: {})", available.join(", "))]
    UnknownProblem {
        name: String,
        available: Vec<String>,
    },

    #[error("invalid problem description: {0}")]
    Parse(String),

    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DirectionError {
    /// The constraint rows defining the tangent space are linearly dependent.
    #[error("constraint gradients are rank deficient: rank {rank} < {rows} rows")]
    Rank { rank: usize, rows: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("approximation tolerance gamma must lie in (0, 1], got {0}")]
    Gamma(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("projection did not converge after {iterations} iterations: {reason}")]
    NoConvergence { iterations: usize, reason: String },

    #[error("no root of the retraction equation within the bracket limit")]
    NoRoot,

    #[error("chart has {codim} defining constraints; this retraction needs exactly one")]
    UnsupportedChart { codim: usize },

    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineSearchError {
    #[error("line search precondition violated: {0}")]
    Precondition(String),

    #[error("no acceptable step within {k_max} backtracking steps")]
    NoStep { k_max: u32 },

    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Crate-wide error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Problem(#[from] ProblemError),

    #[error(transparent)]
    Direction(#[from] DirectionError),

    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error(transparent)]
    LineSearch(#[from] LineSearchError),

    #[error("invalid configuration: {0}")]
    Config(String),
}
