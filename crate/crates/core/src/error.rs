use thiserror::Error;

/// Errors raised by coreset construction, solvers and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoresetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("rank deficiency: {0}")]
    RankDeficiency(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("conditioning failure: {0}")]
    ConditioningFailure(String),

    #[error("scheme mismatch: expected {expected}, got {found}")]
    SchemeMismatch { expected: String, found: String },

    #[error("dimension too large for brute-force oracle: d+1 = {0} > 3")]
    DimensionTooLarge(usize),

    #[error("invalid scores: {0}")]
    InvalidScores(String),

    #[error("theorem inapplicable: {0}")]
    TheoremInapplicable(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error: {0}")]
    Io(String),
}

impl CoresetError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CoresetError::InvalidParameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        CoresetError::Shape(msg.into())
    }

    /// Validation errors are user mistakes; everything else is internal.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            CoresetError::InvalidParameter(_)
                | CoresetError::Shape(_)
                | CoresetError::NonFinite { .. }
                | CoresetError::SchemeMismatch { .. }
                | CoresetError::DimensionTooLarge(_)
                | CoresetError::InvalidScores(_)
                | CoresetError::TheoremInapplicable(_)
                | CoresetError::Parse { .. }
                | CoresetError::Schema(_)
                | CoresetError::Io(_)
        )
    }
}

impl From<std::io::Error> for CoresetError {
    fn from(e: std::io::Error) -> Self {
        CoresetError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CoresetError>;
