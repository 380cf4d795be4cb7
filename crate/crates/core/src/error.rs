use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("near-singular determinant at p = {p}")]
    NearSingular { p: f64 },
    #[error("winding number not resolved: {0}")]
    Resolution(String),
    #[error("degenerate momenta: {0}")]
    DegenerateMomenta(String),
    #[error("pole on the integration manifold at {re} + {im}i")]
    Pole { re: f64, im: f64 },
    #[error("singular argument: {0}")]
    SingularArgument(String),
    #[error("quadrature did not converge: {0}")]
    NotConverged(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("matrix is not skew-symmetric: {0}")]
    NotSkew(String),
    #[error("internal consistency violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
