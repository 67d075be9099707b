use std::fmt;

/// Errors from surrogate construction and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    Config(String),
    Dimension(String),
    /// Reference mass for the conservation correction is not positive.
    DegenerateMass(f64),
    /// Checkpoint parsing/validation failures.
    Checkpoint(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Config(msg) => write!(f, "config: {msg}"),
            ModelError::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            ModelError::DegenerateMass(m) => {
                write!(f, "reference mass {m} must be positive")
            }
            ModelError::Checkpoint(msg) => write!(f, "checkpoint: {msg}"),
        }
    }
}

impl std::error::Error for ModelError {}

impl From<oilpore_core::CoreError> for ModelError {
    fn from(err: oilpore_core::CoreError) -> Self {
        ModelError::Config(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
