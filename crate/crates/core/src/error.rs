use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("all weights are zero")]
    AllZero,
    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("parse error at row {row}: {message}")]
    Parse { row: u64, message: String },
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("coordinate out of range: {0}")]
    OutOfRange(String),
    #[error("(A, B) is not controllable: Gramian eigenvalues span [{min_eig:e}, {max_eig:e}]")]
    NotControllable { min_eig: f64, max_eig: f64 },
    #[error("Gramian is singular or not positive definite")]
    SingularGramian,
    #[error("total masses differ: tasks {tasks}, agents {agents}")]
    MassMismatch { tasks: f64, agents: f64 },
    #[error("iteration limit {iterations} reached with marginal violation {violation:e}")]
    IterationLimit { iterations: usize, violation: f64 },
    #[error("instance too large for exhaustive enumeration ({n_tasks} x {n_agents})")]
    TooLarge { n_tasks: usize, n_agents: usize },
    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable variant name, used by the CLI when reporting solver failures.
    pub fn name(&self) -> &'static str {
        match self {
            Error::AllZero => "AllZero",
            Error::NegativeWeight { .. } => "NegativeWeight",
            Error::NonFinite { .. } => "NonFinite",
            Error::Empty(_) => "Empty",
            Error::Parse { .. } => "ParseError",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::OutOfRange(_) => "OutOfRange",
            Error::NotControllable { .. } => "NotControllable",
            Error::SingularGramian => "SingularGramian",
            Error::MassMismatch { .. } => "MassMismatch",
            Error::IterationLimit { .. } => "IterationLimit",
            Error::TooLarge { .. } => "TooLarge",
            Error::InvalidSpec { .. } => "InvalidSpec",
            Error::Io { .. } => "Io",
        }
    }

    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
