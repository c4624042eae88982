use thiserror::Error;

/// Errors raised when an input violates an operation's preconditions or a
/// numerical stage fails.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("density 1 + lambda*sigma(x) is not positive on [-1/2, 1/2] (lower bound {lower_bound:.6e})")]
    InvalidDensity { lower_bound: f64 },

    #[error("`{name}` out of range: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("mass matrix is not positive definite at basis size {basis_size}")]
    MassNotPositiveDefinite { basis_size: usize },

    #[error("eigensolver failed to converge at basis size {basis_size}")]
    EigenSolve { basis_size: usize },

    #[error("least-squares system is rank deficient (rank {rank} < {columns} columns)")]
    RankDeficient { rank: usize, columns: usize },
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
