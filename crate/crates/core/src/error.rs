use std::path::PathBuf;

use thiserror::Error;

use crate::model::ConfigViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("model definition error: {0}")]
    ModelDefinition(String),

    #[error("invalid model configuration: {}", format_violations(.0))]
    InvalidModel(Vec<ConfigViolation>),

    #[error("data error: {0}")]
    Data(String),

    #[error("{}: row {row}: {message}", .path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_violations(violations: &[ConfigViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
