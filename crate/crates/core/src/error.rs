use thiserror::Error;

pub type Result<T> = std::result::Result<T, EwdError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EwdError {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("covariance is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    InvalidCovariance { min_eigenvalue: f64 },

    #[error("degenerate reference distribution: covariance determinant {det:e}")]
    DegenerateDistribution { det: f64 },

    #[error("normalization scale must be positive and finite, got {0}")]
    InvalidScale(f64),

    #[error("edge sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("invalid loss configuration: {0}")]
    InvalidConfig(String),

    #[error("density is not symmetric about 0 (|p(x) - p(-x)| = {0:e})")]
    AsymmetricDensity(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instance too large for the exact oracle: {atoms} atoms (limit {limit})")]
    TooLarge { atoms: usize, limit: usize },

    #[error("manifest error: {0}")]
    Manifest(String),
}
