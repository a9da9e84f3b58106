use thiserror::Error;

/// Errors raised by the algorithms in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SudlerError {
    #[error("invalid base b = {0}: supported values are 1..=20")]
    InvalidBase(u32),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("invalid Ostrowski digits: {0}")]
    InvalidDigits(String),

    #[error("value outside the supported domain: {0}")]
    Domain(String),

    #[error("precision fault: {0}")]
    PrecisionFault(String),

    #[error("envelope interval [{lo}, {hi}] may contain a zero of the limit function")]
    IntervalContainsZero { lo: f64, hi: f64 },

    #[error("independent computations disagree: {0}")]
    Inconsistent(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, SudlerError>;
