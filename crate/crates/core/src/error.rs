use thiserror::Error;

use crate::otp::Condition;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid bitstring {0:?}: only '0' and '1' are allowed")]
    InvalidBitstring(String),

    #[error("bit length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid Bell label {0:?}")]
    InvalidBellLabel(String),

    #[error("invalid state vector: {0}")]
    InvalidState(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("observation {0} has zero probability")]
    ZeroProbabilityObservation(String),

    #[error("enumeration needs {needed} evaluations, budget is {budget}")]
    EnumerationBudget { needed: u128, budget: u128 },

    #[error("key exhausted: need {needed} unused bits, {available} available")]
    KeyExhausted { needed: usize, available: usize },

    #[error("key reuse refused: the request would consume already used pad bits")]
    ReuseViolation,

    #[error("ciphertext was produced under a different key")]
    KeyMismatch,

    #[error("one-time-pad condition violated: {0}")]
    ConditionViolation(Condition),

    #[error("message length must be even and at least 2, got {0}")]
    OddMessageLength(usize),

    #[error("protocol run needs at least one entangled pair")]
    NoPairs,

    #[error("resource counts must be positive")]
    NoResources,

    #[error("invalid configuration: {0}")]
    Config(String),
}
