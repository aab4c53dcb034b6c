use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("duality map requested at the zero vector")]
    ZeroVector,

    #[error("operation requires a nonzero element")]
    ZeroElement,

    #[error("inner exponent q = {0} is not smooth; need 1 < q < inf")]
    NotSmooth(f64),

    #[error("outer exponent p = {0} is not supported here; need 1 < p < inf")]
    UnsupportedExponent(f64),

    #[error("objective returned a non-finite value at alpha = {0}")]
    NonFiniteValue(f64),

    #[error("invalid specification: {0}")]
    BadSpec(String),

    #[error("degenerate random draw after {0} attempts")]
    DegenerateDraw(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
