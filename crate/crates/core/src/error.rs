use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The sample does not carry enough distinct information for the estimator.
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    /// A structural precondition on the input was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The simulated state left the finite reals.
    #[error("non-finite state at t={t}: {detail}")]
    NonFinite { t: u64, detail: String },

    /// Configuration failed validation; every offending field is listed.
    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
