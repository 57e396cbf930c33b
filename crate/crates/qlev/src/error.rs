use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate plane: smallest singular value {sigma_min:.3e} below threshold")]
    DegeneratePlane { sigma_min: f64 },
    #[error("level {level} has no seeds in the window")]
    EmptyLevel { level: f64 },
    #[error("seed is off the level set: |g - c| = {residual:.3e}")]
    SeedOffLevel { residual: f64 },
    #[error("level correction stalled after {attempts} consecutive failures")]
    StalledCorrection { attempts: usize },
    #[error("no integer normal candidate within tolerance")]
    NoCandidate,
    #[error("ambiguous label: residuals {best:.3e} and {second:.3e} are within a factor of 10")]
    AmbiguousLabel { best: f64, second: f64 },
    #[error("fewer than 3 perturbed planes yielded open-strip classifications ({got})")]
    InsufficientOpenSamples { got: usize },
    #[error("boundedness certificate failed: range grew by factor {ratio:.3}")]
    BoundednessFailed { ratio: f64 },
    #[error("degenerate point set: fewer than 2 distinct points")]
    DegeneratePointSet,
    #[error("scan records do not cover the full grid for level {level}")]
    IncompleteGrid { level: f64 },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
