use thiserror::Error;

/// Failure modes shared by every analyzer. `code()` gives the stable
/// machine-readable tag used by the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid-graph: {0}")]
    InvalidGraph(String),
    #[error("invalid-subspace: {0}")]
    InvalidSubspace(String),
    #[error("invalid-query: {0}")]
    InvalidQuery(String),
    #[error("invalid-function: {0}")]
    InvalidFunction(String),
    #[error("invalid-params: {0}")]
    InvalidParams(String),
    #[error("window-violation: {0}")]
    WindowViolation(String),
    #[error("invalid-comparison: {0}")]
    InvalidComparison(String),
    #[error("not-verifiable-on-window: {0}")]
    NotVerifiableOnWindow(String),
    #[error("out-of-domain: {0}")]
    OutOfDomain(String),
    #[error("invalid-document: {0}")]
    InvalidDocument(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidGraph(_) => "invalid-graph",
            Error::InvalidSubspace(_) => "invalid-subspace",
            Error::InvalidQuery(_) => "invalid-query",
            Error::InvalidFunction(_) => "invalid-function",
            Error::InvalidParams(_) => "invalid-params",
            Error::WindowViolation(_) => "window-violation",
            Error::InvalidComparison(_) => "invalid-comparison",
            Error::NotVerifiableOnWindow(_) => "not-verifiable-on-window",
            Error::OutOfDomain(_) => "out-of-domain",
            Error::InvalidDocument(_) => "invalid-document",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
