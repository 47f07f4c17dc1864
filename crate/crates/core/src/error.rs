use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not etale: determinant is not a unit")]
    NotEtale,
    #[error("precision exhausted: {0}")]
    NeedsPrecision(String),
    #[error("generators do not span a full lattice")]
    NotFull,
    #[error("ambient module mismatch")]
    AmbientMismatch,
    #[error("quotient dimension {dim} exceeds ceiling {ceiling}")]
    Infeasible { dim: usize, ceiling: usize },
    #[error("more than {limit} models")]
    TooManyModels { limit: usize },
    #[error("no model at level {level}")]
    NoModel { level: usize },
    #[error("matrix is not invertible")]
    NotInvertible,
    #[error("property violation: {0}")]
    Violation(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
