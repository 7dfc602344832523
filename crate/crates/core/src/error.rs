use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the crate.
///
/// `is_validation` separates bad input (exit code 1 at the CLI) from
/// failures that happen while running (exit code 2).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("objective returned a non-finite value for particle {particle} at {position:?}")]
    NonFiniteObjective { particle: usize, position: Vec<f64> },

    #[error("unknown particle id {particle} (swarm size {swarm_size})")]
    UnknownParticle { particle: usize, swarm_size: usize },

    #[error("objective `{0}` is not registered")]
    ObjectiveNotFound(String),

    #[error("objective `{0}` is already registered")]
    DuplicateObjective(String),

    #[error("parameters outside the admissible regime: {0}")]
    ParameterRegime(String),

    #[error("covariance is singular: p and g coincide on coordinate {coord}")]
    SingularGamma { coord: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("distance |x - g| = {distance:e} is below the floor {floor:e}; use a smaller iteration index")]
    BelowFloor { distance: f64, floor: f64 },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("argument {value} outside the open interval (0, 1)")]
    OutsideUnitInterval { value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty cohort: {0}")]
    EmptyCohort(String),

    #[error("malformed trajectory stream: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by invalid user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::ObjectiveNotFound(_)
                | Error::DuplicateObjective(_)
                | Error::ParameterRegime(_)
                | Error::OutsideUnitInterval { .. }
                | Error::DimensionMismatch { .. }
                | Error::UnknownParticle { .. }
                | Error::Json(_)
        )
    }
}
