use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Two or more steering directions coincide.
    #[error("degenerate array manifold: {0}")]
    DegenerateManifold(String),
    /// The Gram matrix of the whitened steering matrix is too ill-conditioned.
    #[error("ill-conditioned array manifold (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },
    #[error("singular source covariance: {0}")]
    SingularCovariance(String),
    /// A determinant or factorization hit a non-positive pivot.
    #[error("numeric degeneracy: {0}")]
    NumericDegeneracy(String),
    /// Input data violates a structural requirement (PSD, positive diagonal).
    #[error("invalid data: {0}")]
    Data(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
