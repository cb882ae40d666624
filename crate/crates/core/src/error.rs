use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("symmetric eigensolver did not converge within {iterations} iterations")]
    EigenNonConvergence { iterations: usize },

    #[error("dimension {dim} exceeds the dense limit of {max}")]
    TooLarge { dim: usize, max: usize },

    #[error("invalid tableau: {0}")]
    InvalidTableau(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("fixed-point iteration diverged (stage norm ratio {ratio:.3e}); try a smaller step")]
    Divergence { ratio: f64 },

    #[error("reference solution did not converge after {halvings} halvings (differences: {history:?})")]
    ReferenceNotConverged { halvings: usize, history: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("problem evaluation failed: {0}")]
    Evaluation(String),
}

impl Error {
    /// True for failures caused by the numerics rather than by a malformed request.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNonConvergence { .. }
                | Error::Divergence { .. }
                | Error::ReferenceNotConverged { .. }
                | Error::Evaluation(_)
        )
    }
}
