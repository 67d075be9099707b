use std::fmt;

/// Evaluation-harness failures.
#[derive(Debug)]
pub enum EvalError {
    Config(String),
    Model(oilpore_surrogate::ModelError),
    Solver(oilpore_solver::SolverError),
    Data(oilpore_data::DataError),
    /// Wall-clock resolution too coarse for the measured workload.
    TimerResolution { median_ns: u128 },
    Io(std::io::Error),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Config(msg) => write!(f, "config: {msg}"),
            EvalError::Model(err) => write!(f, "model: {err}"),
            EvalError::Solver(err) => write!(f, "solver: {err}"),
            EvalError::Data(err) => write!(f, "data: {err}"),
            EvalError::TimerResolution { median_ns } => write!(
                f,
                "timer resolution insufficient for {median_ns} ns repetitions; \
                 increase the measured batch"
            ),
            EvalError::Io(err) => write!(f, "io: {err}"),
        }
    }
}

impl std::error::Error for EvalError {}

impl From<oilpore_surrogate::ModelError> for EvalError {
    fn from(e: oilpore_surrogate::ModelError) -> Self {
        EvalError::Model(e)
    }
}

impl From<oilpore_solver::SolverError> for EvalError {
    fn from(e: oilpore_solver::SolverError) -> Self {
        EvalError::Solver(e)
    }
}

impl From<oilpore_data::DataError> for EvalError {
    fn from(e: oilpore_data::DataError) -> Self {
        EvalError::Data(e)
    }
}

impl From<oilpore_core::CoreError> for EvalError {
    fn from(e: oilpore_core::CoreError) -> Self {
        EvalError::Config(e.to_string())
    }
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, EvalError>;
