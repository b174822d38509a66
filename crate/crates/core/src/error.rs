use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two recursion paths for the same coefficient disagree.
    #[error("coefficient recursion inconsistent at (i={i}, j={j}): {left} != {right}")]
    Inconsistent {
        i: i64,
        j: i64,
        left: String,
        right: String,
    },

    /// A numerically computed integer is too far from any integer to round safely.
    #[error("ambiguous rounding: value {value} is {gap:.3} from the rounding boundary; raise the quadrature order")]
    Precision { value: f64, gap: f64 },

    /// A lookup by name failed (bundle, polynomial, chain, section, split).
    #[error("unknown {kind}: {name}")]
    Unknown { kind: &'static str, name: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
