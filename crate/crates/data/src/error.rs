use std::fmt;

/// Errors from dataset generation and the record file format.
#[derive(Debug)]
pub enum DataError {
    Config(String),
    /// Scenario sampling kept rejecting candidates.
    Infeasible(String),
    /// Malformed record file (magic, version, truncation, checksum).
    Format(String),
    Io(std::io::Error),
    Solver(oilpore_solver::SolverError),
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::Config(msg) => write!(f, "config: {msg}"),
            DataError::Infeasible(msg) => write!(f, "scenario infeasible: {msg}"),
            DataError::Format(msg) => write!(f, "record format: {msg}"),
            DataError::Io(err) => write!(f, "io: {err}"),
            DataError::Solver(err) => write!(f, "solver: {err}"),
        }
    }
}

impl std::error::Error for DataError {}

impl From<std::io::Error> for DataError {
    fn from(err: std::io::Error) -> Self {
        DataError::Io(err)
    }
}

impl From<oilpore_solver::SolverError> for DataError {
    fn from(err: oilpore_solver::SolverError) -> Self {
        DataError::Solver(err)
    }
}

impl From<oilpore_core::CoreError> for DataError {
    fn from(err: oilpore_core::CoreError) -> Self {
        DataError::Config(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DataError>;
