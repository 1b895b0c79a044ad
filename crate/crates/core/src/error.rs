use thiserror::Error;

/// Errors raised while sampling, evaluating, or integrating random Hamiltonians.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time {t} is outside the sampled range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("covariance matrix is not positive definite after jitter {jitter}")]
    FactorizationFailure { jitter: f64 },

    #[error("operation requires autonomous Hamiltonians")]
    NotAutonomous,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("flow left the finite range at t = {t}")]
    NonFinite { t: f64 },

    #[error("curve refinement exceeded depth {max_depth}")]
    RefinementOverflow { max_depth: u32 },

    #[error("curve overlaps the level set of {label} on {fraction:.3} of its segments")]
    DegenerateOverlap { label: String, fraction: f64 },

    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{row}: {failed} of {total} samples failed (first at index {first_index}: {first_message})")]
    TooManyFailures {
        row: String,
        failed: usize,
        total: usize,
        first_index: usize,
        first_message: String,
    },

    #[error("io failure on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn validation(field: &str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
