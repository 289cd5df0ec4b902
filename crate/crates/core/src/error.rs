use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("simulation diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("non-finite value while {context}")]
    NonFinite { context: String },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("data rank condition failed: rank {rank} < required {required}")]
    Rank { rank: usize, required: usize },

    #[error("design infeasible (solver status: {status})")]
    Infeasible { status: String },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
