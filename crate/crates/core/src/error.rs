use thiserror::Error;

use crate::point::PointSequence;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or malformed.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A density or intensity evaluated to NaN or +inf.
    #[error("non-finite value ({message}) at sequence {sequence}")]
    Numeric { message: String, sequence: PointSequence },

    /// The model broke a contract it declared (bounds, hereditariness, local stability).
    #[error("model contract violated: {0}")]
    ModelContract(String),

    /// Evaluation outside the domain a model is defined on.
    #[error("outside model domain: {0}")]
    Domain(String),

    #[error("capacity exceeded: {what} needs {required}, limit is {limit}")]
    Capacity {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("missing interaction entry for key {0}")]
    Lookup(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::ModelContract(msg.into())
    }
}
