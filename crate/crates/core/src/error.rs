use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    /// Orthonormalization or another numerically degenerate step failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("quadrature did not converge: last two iterates {previous:e} and {last:e}")]
    QuadratureNonConvergence { previous: f64, last: f64 },

    #[error("replica {index} failed")]
    Replica {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Strips any `Replica` wrappers.
    pub fn innermost(&self) -> &Error {
        match self {
            Error::Replica { source, .. } => source.innermost(),
            e => e,
        }
    }
}
