use std::path::PathBuf;

use crate::scenario::ZoneId;

/// A violated configuration invariant, with the dotted path of the field.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path} {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub(crate) fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("{file}: expected format {expected} version {expected_version}, found {found}")]
    FormatMismatch {
        file: String,
        expected: &'static str,
        expected_version: u32,
        found: String,
    },

    #[error("truck {truck_id}: departure {departure_s} s is not after arrival {arrival_s} s")]
    NonPositiveStay {
        truck_id: u64,
        arrival_s: u64,
        departure_s: u64,
    },

    #[error("event log is not sorted by arrival at truck {truck_id}")]
    Unsorted { truck_id: u64 },

    #[error(
        "event log truck ids are not dense in arrival order (found {found} at position {position})"
    )]
    NonDenseIds { position: usize, found: u64 },

    #[error(
        "capacity of {zone} zone exceeded at t = {time_s} s ({count} parked, capacity {capacity})"
    )]
    CapacityViolation {
        time_s: u64,
        zone: ZoneId,
        count: u32,
        capacity: u32,
    },

    #[error("series grids do not line up: {0}")]
    GridMismatch(String),

    #[error("training day set is empty")]
    EmptyTrainingSet,

    #[error("threshold grid is empty after enforcing filled < full")]
    EmptyThresholdGrid,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
