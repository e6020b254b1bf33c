use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {source_name}: {message}")]
    Parse {
        source_name: String,
        message: String,
    },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("invalid value: {0}")]
    Value(String),

    #[error("profile must have 24 hourly rows, found {0}")]
    RowCount(usize),

    #[error("more than one {0} unit in placement")]
    DuplicateKind(crate::dg::DgKind),

    #[error("bus {bus} is not a valid DG location (expected 2..={n_bus})")]
    InvalidBus { bus: usize, n_bus: usize },

    #[error("invalid bounds in dimension {dim}: lower {lower} > upper {upper}")]
    Bounds { dim: usize, lower: f64, upper: f64 },

    #[error("load flow did not converge: {0}")]
    Convergence(String),

    #[error("normalization reference is zero: {0}")]
    DegenerateNormalization(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("reports cover different scenarios: {0} vs {1}")]
    ScenarioMismatch(String, String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            message: message.into(),
        }
    }

    /// True for failures of a computation on valid input.
    pub fn is_computation(&self) -> bool {
        matches!(
            self,
            Error::Convergence(_) | Error::DegenerateNormalization(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
