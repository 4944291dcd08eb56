use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The population does not support the requested operation
    /// (density of a lattice, second moment of a Cauchy law, ...).
    #[error("capability error: {0}")]
    Capability(String),

    #[error("moment order {order} unavailable (limit {limit})")]
    Order { order: i64, limit: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("enumeration size {size} exceeds guard {limit}")]
    Size { size: f64, limit: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular matrix: {0}")]
    Singularity(String),

    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }

    pub(crate) fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}
