use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunsError {
    /// The requested computation would exceed a configured size limit.
    #[error("resource limit: {what} (requested {requested}, limit {limit})")]
    Resource {
        what: &'static str,
        requested: u64,
        limit: u64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, RunsError>;
