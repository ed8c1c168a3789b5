use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("elements belong to different contexts")]
    ContextMismatch,
    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("not invertible: {0}")]
    Singular(String),
    #[error("nondegeneracy error: {0}")]
    Nondegenerate(String),
    #[error("dimension constraint violated: {0}")]
    Constraint(String),
    #[error("form is not closed: {0}")]
    NotClosed(String),
    #[error("parity error: {0}")]
    Parity(String),
    #[error("structure of nonzero degree {0} has no reduction")]
    NotReducible(String),
    #[error("no primitive: {0}")]
    NoPrimitive(String),
    #[error("algorithm failure: {0}")]
    Algorithm(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("gauge condition fails: {0}")]
    Gauge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
