use thiserror::Error;

use crate::gint::GaussInt;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{value} is not divisible by phi^{k}")]
    NotDivisible { value: GaussInt, k: u32 },

    #[error("coset level k={0} is outside the supported range 1..=6")]
    UnsupportedLevel(u32),

    #[error("code length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid code rate {0}")]
    InvalidRate(f64),

    #[error("invalid flip probability {0}; expected 0 < p < 0.5")]
    InvalidFlipProb(f64),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("malformed compressed block: {0}")]
    MalformedBlock(String),

    #[error("empty coset in candidate set")]
    EmptyCoset,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
