use thiserror::Error;

/// Errors raised by network construction, objective evaluation and the
/// block solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BsumError {
    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("value outside the domain of {0}")]
    Domain(String),

    #[error("layer {layer} has a non-smooth regularizer; use the proximal update path")]
    NonSmooth { layer: usize },

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("curvature condition violated: {0}")]
    Curvature(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("problem size {size} exceeds the budget of {limit}")]
    Size { size: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, BsumError>;

pub(crate) fn shape_err(context: &'static str, expected: impl Into<String>, got: impl Into<String>) -> BsumError {
    BsumError::Shape {
        context,
        expected: expected.into(),
        got: got.into(),
    }
}
