use thiserror::Error;

/// Errors raised by the training library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or inconsistent input data.
    #[error("invalid input: {0}")]
    Input(String),

    /// Malformed LIBSVM text.
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A factorization broke down or an iterate became non-finite.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The dense Gram matrix would exceed the configured sample cap.
    #[error("dense Gram matrix for {m} samples exceeds the cap of {cap}; use a low-rank strategy (smw or sparse)")]
    Capacity { m: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
