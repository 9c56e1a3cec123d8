use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The exact enumerators refuse games above their size guard.
    #[error("game too large for {method}: n = {n}, limit is {limit}")]
    Size {
        method: &'static str,
        n: usize,
        limit: usize,
    },

    /// An experiment or CLI configuration is malformed.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A quadrature or series did not reach its tolerance.
    #[error("no convergence in {what}: {detail}")]
    Convergence { what: &'static str, detail: String },

    /// A renewal replication exceeded the draw guard.
    #[error("runaway replication: more than {limit} draws before reaching Q = {quota}")]
    Runaway { limit: u64, quota: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
