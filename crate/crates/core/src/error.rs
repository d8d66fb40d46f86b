use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh topology error: {0}")]
    Topology(String),

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("derivative order {0} is not supported (maximum is 3)")]
    UnsupportedOrder(usize),

    #[error("quadrature of degree {degree} is not available on the {domain}")]
    UnsupportedQuadrature { domain: &'static str, degree: usize },

    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sparse factorization failed: {0}")]
    Solver(String),

    #[error("solution residual {residual:e} exceeds tolerance {tolerance:e}")]
    Accuracy { residual: f64, tolerance: f64 },

    #[error("point ({0}, {1}) is not inside the mesh")]
    Location(f64, f64),

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error stems from user configuration rather than a numerical failure.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Config(_)
                | Error::UnsupportedDegree(_)
                | Error::UnsupportedOrder(_)
                | Error::UnsupportedQuadrature { .. }
        )
    }
}
