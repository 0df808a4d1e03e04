use thiserror::Error;

use crate::forms::Point;

/// Errors raised by the form calculus, the builders and the scenario layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: u8, found: u8 },

    #[error("form degree {0} exceeds 4")]
    DegreeOverflow(u8),

    #[error("matrix is singular{}", .at.map(|p| format!(" at {p}")).unwrap_or_default())]
    Singular { at: Option<Point> },

    #[error("field is not evaluable at {at}: {reason}")]
    NotEvaluable { at: Point, reason: String },

    #[error("jet order {requested} exceeds the supported maximum {max}")]
    JetOrder { requested: usize, max: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature diverged: |integral| = {0:e}")]
    Divergent(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
