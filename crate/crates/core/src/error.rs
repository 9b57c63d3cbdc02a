use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid study window: {0}")]
    InvalidWindow(String),

    #[error("invalid radius {0}: must be finite and > 0")]
    InvalidRadius(f64),

    #[error("invalid angle {value}: {reason}")]
    InvalidAngle { value: f64, reason: &'static str },

    #[error("invalid polygon: {sides} sides (need at least 3)")]
    InvalidPolygon { sides: usize },

    #[error("invalid privacy constraint k = {0}: must be finite and > 0")]
    InvalidConstraint(f64),

    #[error("undefined density: population count is zero")]
    UndefinedDensity,

    #[error("degenerate density {0} at focal site: must be > 0")]
    DegenerateDensity(f64),

    #[error(
        "privacy constraint unreachable: expected count {best_count} < k = {k} \
         even at the largest searched radius {best_radius}"
    )]
    ConstraintUnreachable {
        k: f64,
        best_radius: f64,
        best_count: f64,
    },

    #[error("singular information matrix (determinant {0})")]
    SingularMatrix(f64),

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("radii map is empty: no grid centroid has positive intensity")]
    EmptyMap,

    #[error("invalid intensity field: {0}")]
    InvalidField(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("raster parse error at line {line}: {message}")]
    RasterParse { line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
