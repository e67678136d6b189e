use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no samples to fit")]
    EmptySamples,

    #[error("bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),

    #[error("{what} {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("series {chart_id}: {reason}")]
    InvalidSeries { chart_id: String, reason: String },

    #[error("segments are not adjacent (first ends at {first_end}, second starts at {second_start})")]
    NonAdjacentSegments { first_end: usize, second_start: usize },

    #[error("empty query")]
    EmptyQuery,

    #[error("no query terms")]
    NoQueryTerms,

    #[error("invalid date range: {0}")]
    InvalidRange(String),

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {message}")]
    EmptyFile { path: PathBuf, message: String },

    #[error(
        "{path}: file format version {found} is not supported (expected {expected}); re-run `trendsearch {regenerate}` to regenerate it"
    )]
    VersionMismatch {
        path: PathBuf,
        found: String,
        expected: u32,
        /// Subcommand that writes this file.
        regenerate: &'static str,
    },

    #[error(
        "events were labeled with models {events} but the loaded models are {models}; re-run `trendsearch label`"
    )]
    StaleEvents { events: String, models: String },

    #[error("unknown chart {0}")]
    UnknownChart(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
