use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the laboratory.
///
/// Divergence of a run is never an error: it is recorded as an event on the
/// run result. Errors are reserved for bad configuration, evaluations outside
/// the domain of a formula, and numerical procedures that fail to converge.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("point outside the curve horizon: {0}")]
    OutOfDomain(String),

    #[error("numerical error: {msg} (last iterates: {trace:?})")]
    Numerical { msg: String, trace: Vec<f64> },

    #[error("restart infeasible: available mass {available:.6e} < requested {requested:.6e}")]
    InfeasibleRestart { available: f64, requested: f64 },

    #[error("budget exceeded on `{parameter}`: {detail}")]
    Budget { parameter: String, detail: String },

    #[error("parse error in {origin}: {msg}")]
    Parse { origin: String, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
