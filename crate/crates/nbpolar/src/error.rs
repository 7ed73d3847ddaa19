use thiserror::Error;

/// Errors produced by field construction, code configuration, and the
/// file-backed front ends.
#[derive(Debug, Error)]
pub enum Error {
    /// The polynomial does not have the stated degree `r` (bit `r` clear or
    /// higher bits set).
    #[error("polynomial 0b{poly:b} does not have degree {r}")]
    DegreeMismatch { poly: u32, r: u32 },

    /// The polynomial is not primitive: powers of `x` do not enumerate all
    /// `q - 1` nonzero field elements.
    #[error("polynomial 0b{poly:b} is not primitive over GF(2)")]
    NotPrimitive { poly: u32 },

    /// A parameter (block length, rate, kernel factor, index set, ...) is
    /// outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two buffers that must agree in length do not.
    #[error("length mismatch: {what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    /// A cache/config/results file exists but its contents do not parse or
    /// do not match the requested parameters.
    #[error("bad file {path}: {reason}")]
    BadFile { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
