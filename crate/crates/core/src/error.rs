use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Transport failed on every permitted attempt.
    #[error("backend unavailable after {attempts} attempt(s): {reason}")]
    BackendUnavailable { attempts: u32, reason: String },

    /// The endpoint answered but omitted the first-token probability report
    /// a reflection call asked for. `text` carries whatever it generated.
    #[error("protocol degraded: response carried no token probabilities")]
    ProtocolDegraded { text: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("corpus {0} contains no usable samples")]
    EmptyCorpus(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
