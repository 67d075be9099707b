use std::fmt;

/// Training failures.
#[derive(Debug)]
pub enum TrainError {
    Config(String),
    Model(oilpore_surrogate::ModelError),
    /// Loss became non-finite; carries the epoch it happened in.
    Diverged { epoch: usize },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Config(msg) => write!(f, "config: {msg}"),
            TrainError::Model(err) => write!(f, "model: {err}"),
            TrainError::Diverged { epoch } => {
                write!(f, "training diverged (non-finite loss) at epoch {epoch}")
            }
        }
    }
}

impl std::error::Error for TrainError {}

impl From<oilpore_surrogate::ModelError> for TrainError {
    fn from(err: oilpore_surrogate::ModelError) -> Self {
        TrainError::Model(err)
    }
}

impl From<oilpore_core::CoreError> for TrainError {
    fn from(err: oilpore_core::CoreError) -> Self {
        TrainError::Config(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, TrainError>;
