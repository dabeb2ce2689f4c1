use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{function}: argument {value} is outside the domain ({constraint})")]
    Domain {
        function: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("kernel evaluated at coincident points (separation {separation:e})")]
    Singularity { separation: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {requested:e}")]
    Accuracy { achieved: f64, requested: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{field} must be {constraint}")]
    Validation { field: String, constraint: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("operation requires an obstacle but the scene has none")]
    NoObstacle,

    #[error("degenerate parameterization: speed {speed:e} at theta = {theta}")]
    DegenerateParameterization { theta: f64, speed: f64 },

    #[error("volume cell size {h} exceeds the perturbation height {height}; mesh would not resolve the interface")]
    EmptyMesh { h: f64, height: f64 },

    #[error("linear system is ill-conditioned (condition estimate {estimate:e}); {hint}")]
    IllConditioned { estimate: f64, hint: &'static str },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("discrepancy level {delta:e} is not below the right-hand side norm {rhs_norm:e}")]
    DiscrepancyUnreachable { delta: f64, rhs_norm: f64 },

    #[error("{failed} of {total} sampling points failed; first failure: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("dataset fingerprint {found} does not match the configured scene {expected}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("malformed dataset file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by user input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Validation { .. }
                | Error::Parse { .. }
                | Error::FingerprintMismatch { .. }
                | Error::Format(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }

    pub(crate) fn validation(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}
