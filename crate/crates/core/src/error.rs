use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its valid domain. `field` names the offending
    /// parameter so front ends can report it.
    #[error("invalid value for `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    /// Every node is dead; no further rounds can be run.
    #[error("simulation complete: no alive nodes remain")]
    NoAliveNodes,

    /// A protocol produced a cluster set that does not partition the alive nodes.
    #[error("cluster set violates the partition invariant: {0}")]
    BrokenPartition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        field,
        reason: reason.into(),
    }
}
