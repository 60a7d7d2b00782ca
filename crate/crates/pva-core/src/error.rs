use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("antiderivative needs a logarithm: {0}")]
    LogRequired(String),
    #[error("order violation: {0}")]
    OrderViolation(String),
    #[error("not exact: {0}")]
    NotExact(String),
    #[error("not closed: {0}")]
    NotClosed(String),
    #[error("division by a non-monomial: {0}")]
    NonmonomialDivisor(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("solver plan does not reproduce K: {0}")]
    PlanMismatch(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("operators fail individually: {0:?}")]
    IndividualFailure(Vec<usize>),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("step {step}: {source}")]
    AtStep {
        step: u32,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
