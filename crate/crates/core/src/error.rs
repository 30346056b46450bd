use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("linkage infeasible at t = {t:.4} s: |AC| = {distance:.6} m outside [{min:.6}, {max:.6}]")]
    LinkageInfeasible {
        t: f64,
        distance: f64,
        min: f64,
        max: f64,
    },

    #[error("rotation axis is not a unit vector (norm {0})")]
    AxisNotUnit(f64),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("series of length {len} is too short (need at least {min})")]
    InsufficientLength { len: usize, min: usize },

    #[error("interpolation grid error: {0}")]
    Grid(String),

    #[error("non-finite training loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("simulation state diverged at t = {t:.4} s")]
    NonFiniteState { t: f64 },

    #[error("model file error: {0}")]
    Model(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
