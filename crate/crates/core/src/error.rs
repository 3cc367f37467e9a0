use thiserror::Error;

use crate::space::SubgraphKey;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid search-space, profile, budget or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller violated an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// The subgraph has no tuning trials yet, so no latency estimate exists.
    #[error("subgraph {0:?} has not been measured yet")]
    NotMeasurable(SubgraphKey),

    #[error("unknown subgraph {0:?}")]
    UnknownKey(SubgraphKey),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
