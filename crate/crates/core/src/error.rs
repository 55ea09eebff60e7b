use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A copula family/parameter combination is invalid.
    #[error("invalid copula: {0}")]
    Spec(String),
    /// A combinatorial or size bound was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// Inconsistent or unusable configuration.
    #[error("config error: {0}")]
    Config(String),
    /// A covariate row could not be routed through a tree.
    #[error("routing error: {0}")]
    Routing(String),
}

impl Error {
    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Spec(_) => "spec",
            Error::Capacity(_) => "capacity",
            Error::Config(_) => "config",
            Error::Routing(_) => "routing",
        }
    }
}
