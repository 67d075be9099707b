use std::fmt;

/// Errors produced by grid and geometry construction.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Invalid configuration value (dimension, range, ratio).
    Config(String),
    /// Scenario geometry cannot be rasterized as requested.
    Geometry(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::Config(msg) => write!(f, "config: {msg}"),
            CoreError::Geometry(msg) => write!(f, "geometry: {msg}"),
        }
    }
}

impl std::error::Error for CoreError {}

pub type Result<T> = std::result::Result<T, CoreError>;
