use thiserror::Error;

/// Which box a bound error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSet {
    Variable,
    Constraint,
}

impl std::fmt::Display for BoundSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundSet::Variable => "variable",
            BoundSet::Constraint => "constraint",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("inverted {set} bound at index {index}: lower > upper")]
    InvertedBound { set: BoundSet, index: usize },
    #[error("non-finite value in {context} at index {index}")]
    NonFiniteData { context: &'static str, index: usize },
    #[error("matrix has no nonzero entries")]
    ZeroMatrix,
    #[error("malformed sparse matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid solver parameter: {0}")]
    InvalidParams(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(Box<Error>),
}

pub type Result<T> = std::result::Result<T, Error>;
