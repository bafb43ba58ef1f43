use std::path::PathBuf;

use thiserror::Error;

/// A physical quantity handed to a model function was outside its domain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("servo angle {0}° outside [0, 180]")]
    AngleOutOfRange(f64),
    #[error("negative pressure {0}")]
    NegativePressure(f64),
    #[error("accelerometer sample has zero magnitude")]
    ZeroMagnitude,
}

/// Failure to load or validate a scenario (or global config) file.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: line {line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("{origin}: {}`{field}`: {reason}", line_prefix(*line))]
    Invalid {
        origin: String,
        field: String,
        line: Option<usize>,
        reason: String,
    },
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

impl ScenarioError {
    /// Name of the offending field, for validation errors.
    pub fn field(&self) -> Option<&str> {
        match self {
            ScenarioError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            ScenarioError::Parse { line, .. } => Some(*line),
            ScenarioError::Invalid { line, .. } => *line,
            ScenarioError::Io { .. } => None,
        }
    }
}
