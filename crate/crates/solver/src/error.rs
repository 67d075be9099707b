use std::fmt;

/// Errors from the reference solver.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// Invalid model or config values.
    Config(String),
    /// An iterative solve failed to reach tolerance; carries the last
    /// relative residual.
    Divergence { what: &'static str, residual: f64 },
    /// Advective CFL limit exceeded; `advised_dt` restores `cfl <= 0.9`.
    Cfl { cfl: f64, advised_dt: f64 },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Config(msg) => write!(f, "config: {msg}"),
            SolverError::Divergence { what, residual } => {
                write!(f, "{what} solve did not converge (residual {residual:.3e})")
            }
            SolverError::Cfl { cfl, advised_dt } => write!(
                f,
                "CFL {cfl:.3} > 1; reduce dt to about {advised_dt:.3e}"
            ),
        }
    }
}

impl std::error::Error for SolverError {}

impl From<oilpore_core::CoreError> for SolverError {
    fn from(err: oilpore_core::CoreError) -> Self {
        SolverError::Config(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;
