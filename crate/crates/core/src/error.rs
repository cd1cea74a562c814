use std::path::PathBuf;

use thiserror::Error;

use crate::sim::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("rule `{0}` has no closed-form storage function")]
    UnsupportedRule(String),

    #[error("state outside model domain: {0}")]
    Domain(String),

    #[error("model parameters are inconsistent: {0}")]
    ModelInconsistency(String),

    #[error("simulation diverged at t = {t}: {reason}")]
    Divergence {
        t: f64,
        reason: String,
        partial: Box<Trajectory>,
    },

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
