use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("bidegree ({0},{1}) out of range for dimension {2}")]
    BidegreeOutOfRange(usize, usize, usize),
    #[error("expected a form of bidegree {expected:?}, got {got}")]
    WrongBidegree { expected: (usize, usize), got: String },
    #[error("mixed bidegrees: {0}")]
    Inhomogeneous(String),
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("singular matrix")]
    Singular,
    #[error("form is not in the range of the map (residual {0:.3e})")]
    NotInRange(f64),
    #[error("non-real value where a real one was expected (imaginary part {0:.3e})")]
    NonReal(f64),
    #[error("complex dimension must be at least {min}, got {got}")]
    DimensionTooSmall { min: usize, got: usize },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("d² ≠ 0: structure equations are not integrable (residual {0:.3e})")]
    NotIntegrable(f64),
    #[error("structure equations are not unimodular (Stokes residual {0:.3e})")]
    NotUnimodular(f64),
    #[error("unknown catalog entry '{0}'")]
    UnknownManifold(String),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
