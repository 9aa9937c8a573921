//! Error type shared by every module.

use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operator failed a Hermiticity or positivity check.
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    /// A scalar parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Operand dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Unperturbed gradient requested at a state whose conditional states are singular.
    #[error("singular conditional state ({0}); use the perturbed gradient")]
    Singular(String),
    /// Constraint set is empty.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// A solver did not reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Announcements fail the commutation condition.
    #[error("announcements are not weakly dependent: {0}")]
    NotWeaklyDependent(String),
    /// Malformed text input.
    #[error("parse error: {0}")]
    Parse(String),
    /// File system error with the offending path.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
