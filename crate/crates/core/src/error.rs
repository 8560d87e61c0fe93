use thiserror::Error;

/// Errors raised while building or solving a problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid contour: {0}")]
    Contour(String),

    #[error("invalid material: {0}")]
    Material(String),

    #[error("invalid surface tension: {0}")]
    SurfaceTension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arc length {s} lies outside {range:?}")]
    OutOfRange { s: f64, range: (f64, f64) },

    #[error("field point s = {s} is within {eps:e} of a crack tip")]
    TipProximity { s: f64, eps: f64 },

    #[error("point z = {re} + {im}i is within {eps} of the contour")]
    NearBoundary { re: f64, im: f64, eps: f64 },

    #[error("quadrature did not converge: matrix entries changed by {change:e} (tolerance {tol:e})")]
    QuadratureNonConvergence { change: f64, tol: f64 },

    #[error("singular system: rank {rank} of {cols}; deficient rows: {tags}")]
    SingularSystem { rank: usize, cols: usize, tags: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
