use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Parameters outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configurable size cap would be exceeded.
    #[error("size cap exceeded: {what} needs {required} but the cap is {cap}")]
    SizeCap {
        what: String,
        required: String,
        cap: u64,
    },

    /// A statistical test cannot be run on the given data.
    #[error("degenerate test: {0}")]
    Degenerate(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn size_cap(what: impl Into<String>, required: impl ToString, cap: u64) -> Self {
        Error::SizeCap {
            what: what.into(),
            required: required.to_string(),
            cap,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
