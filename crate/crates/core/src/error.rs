//! Error type shared by every module, with the CLI exit-code mapping.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not a point of the time scale")]
    NotInScale(f64),

    #[error("{0} is the largest point of the time scale and has no successor")]
    NoSuccessor(f64),

    #[error("({s}, {t}) is outside the domain of the {op} shift")]
    OutOfDomain { op: &'static str, s: f64, t: f64 },

    #[error("system is not regressive: I + mu(t)A(t) is singular at t = {0}")]
    NotRegressive(f64),

    #[error("monodromy matrix is singular")]
    SingularMonodromy,

    #[error("principal logarithm undefined: eigenvalue {re} + {im}i lies on the closed negative real axis")]
    LogBranch { re: f64, im: f64 },

    #[error("homogeneous system is critical: monodromy eigenvalue {re} + {im}i is within {tol} of 1")]
    Critical { re: f64, im: f64, tol: f64 },

    #[error("contraction constant {0} is not below 1; refusing to iterate without force")]
    NotContractive(f64),

    #[error("fixed-point iteration did not converge in {iterations} iterations (last step {last_step})")]
    MaxIterations { iterations: usize, last_step: f64 },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("{0}")]
    Parse(String),

    #[error("invariant violation ({check}): {detail}")]
    InvariantViolation { check: String, detail: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invariant(check: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::InvariantViolation {
            check: check.into(),
            detail: detail.into(),
        }
    }

    /// Stable process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Io(_) => 2,
            Error::InvariantViolation { .. }
            | Error::NotInScale(_)
            | Error::NoSuccessor(_)
            | Error::OutOfDomain { .. } => 3,
            Error::Critical { .. } => 4,
            Error::NotContractive(_) => 5,
            Error::NotRegressive(_)
            | Error::SingularMonodromy
            | Error::LogBranch { .. }
            | Error::Evaluation(_) => 6,
            Error::MaxIterations { .. } => 7,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
