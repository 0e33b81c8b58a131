use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency outside the admissible half-plane: {0}")]
    OutsideHalfPlane(String),

    #[error("inconsistent network: {0}")]
    InconsistentNetwork(String),

    #[error("singular matrix (zero pivot at column {column})")]
    Singular { column: usize },

    #[error("ill-conditioned solve (pivot ratio {pivot_ratio:.3e})")]
    IllConditioned { pivot_ratio: f64 },

    #[error("inverse iteration did not converge after {iterations} steps (last estimate {estimate:.6e})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
