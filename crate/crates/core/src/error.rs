use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fixed-point width {0} is outside 1..=128 or below the operation's minimum")]
    InvalidWidth(u32),

    #[error("fixed-point widths differ: {0} vs {1}")]
    WidthMismatch(u32, u32),

    #[error("empty input")]
    Empty,

    #[error("N = 2^{exponent} exceeds the guard 2^{guard_exponent}")]
    GuardExceeded { exponent: u32, guard_exponent: u32 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
