use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite (pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    /// The SAL density is unbounded at `x == mu` once the dimension is at least two.
    #[error("density is unbounded: x coincides with the location parameter")]
    UnboundedDensity,

    #[error("likelihood is unbounded: observation {row} coincides with the location of component {component}")]
    UnboundedLikelihood { row: usize, component: usize },

    #[error("non-finite responsibilities in row {row}")]
    NonFiniteRow { row: usize },

    #[error("component {component} is degenerate (singular location/skewness system)")]
    DegenerateComponent { component: usize },

    #[error("component {component} has no members")]
    EmptyComponent { component: usize },

    #[error("posterior hyperparameters of component {component} are not positive definite")]
    DegeneratePosterior { component: usize },

    #[error("component {component}: {attempts} consecutive draws fell within the guard distance of an observation")]
    DegenerateDraw { component: usize, attempts: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("results schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
