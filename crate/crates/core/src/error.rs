use thiserror::Error;

/// Failures raised by the secret-sharing layer and the secure checks built on it.
///
/// None of these carry secret material; they describe configuration or
/// protocol-state problems only.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("incomplete shares: share of party {missing} is missing")]
    IncompleteShares { missing: usize },

    #[error("invalid operands: expected {expected}, found {found}")]
    InvalidOperands { expected: usize, found: usize },

    #[error("index {index} out of range for universe of size {n}")]
    InvalidIndex { index: usize, n: usize },

    #[error("beaver triple {id} was already consumed")]
    TripleReuse { id: u64 },

    #[error("random mask {id} was already consumed")]
    MaskReuse { id: u64 },

    #[error("insufficient preprocessing: {resource} pool exhausted")]
    InsufficientPreprocessing { resource: &'static str },

    #[error("transport failure: {0}")]
    Transport(String),
}

pub type Result<T, E = ProtocolError> = std::result::Result<T, E>;
