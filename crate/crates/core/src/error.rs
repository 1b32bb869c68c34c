//! Error taxonomy shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum LasError {
    /// Incompatible tensor shapes or sequence lengths.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A scalar argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Non-finite values where only finite values (or the -inf mask
    /// sentinel) are allowed.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A softmax row with every entry masked to -inf.
    #[error("degenerate softmax row {row}: all entries are -inf")]
    DegenerateRow { row: usize },

    /// Convolution kernel with a negative entry; the log-domain
    /// construction is undefined there.
    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    /// Convolution kernel whose entries sum to zero.
    #[error("degenerate kernel: entries sum to zero")]
    DegenerateKernel,

    /// Malformed input file (IDX container, checkpoint, token list).
    #[error("format error: {0}")]
    Format(String),

    /// Out-of-range runtime input, e.g. a token id past the vocabulary.
    #[error("invalid input: {0}")]
    Input(String),

    /// Rejected run configuration; the message names the offending key.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LasError>;
