use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The real matrix is not of the form `[[Re, -Im], [Im, Re]]`.
    #[error("matrix violates the isomorphic block structure (max deviation {deviation:e})")]
    BlockStructureViolation { deviation: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// The Padé denominator could not be factorized.
    #[error("Padé denominator is singular; reduce the time step or enable scaling and squaring")]
    SingularDenominator,

    /// `Q_uu + mu I` was not positive definite at this stage.
    #[error("regularized Q_uu is not positive definite at stage {stage}")]
    FactorizationFailure { stage: usize },

    #[error("rollout produced a non-finite cost")]
    NonFiniteCost,

    #[error("input matrix is not unitary (deviation {deviation:e})")]
    NonUnitaryInput { deviation: f64 },

    #[error("invalid configuration: `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("controls file {path}: {message}")]
    ControlsFile { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}
