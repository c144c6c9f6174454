use thiserror::Error;

use crate::dist::{Family, Operation};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The requested operation has no exact algorithm for this family.
    #[error("{op} is not supported for {family}: {reason}")]
    Unsupported {
        family: Family,
        op: Operation,
        reason: &'static str,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("distributions do not share a factorization: {0}")]
    ConfigMismatch(String),

    /// No structure has a finite score.
    #[error("distribution is vacuous: every structure has a -inf score")]
    Vacuous,

    #[error("random walk exceeded {0} steps; weights are near-degenerate")]
    WalkStepCapExceeded(u64),

    #[error("no projective tree after {0} draws from the relaxation")]
    RejectionCapExceeded(u64),

    #[error("enumeration of {count} structures exceeds the bound of {bound}")]
    EnumerationTooLarge { count: u128, bound: u128 },
}

impl Error {
    /// The human-readable reason for an unsupported operation, if any.
    pub fn unsupported_reason(&self) -> Option<&'static str> {
        match self {
            Error::Unsupported { reason, .. } => Some(reason),
            _ => None,
        }
    }
}
