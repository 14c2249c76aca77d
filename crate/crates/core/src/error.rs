use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("distance {distance} m is below the minimum separation of {min} m")]
    GeometrySingularity { distance: f64, min: f64 },

    #[error("{what} = {value} is outside its valid range ({range})")]
    Domain {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("operating point is infeasible: {0}")]
    Infeasible(&'static str),

    #[error("no candidate secondary user to select from")]
    NoCandidate,

    #[error("config error: {0}")]
    Config(String),

    #[error("table schema mismatch: {0}")]
    Schema(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, range: impl Into<String>) -> Self {
        Error::Domain {
            what,
            value,
            range: range.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
