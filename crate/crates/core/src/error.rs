use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph is disconnected after {attempts} attempt(s)")]
    Disconnected { attempts: usize },

    #[error("eigensolver failed to converge")]
    EigenConvergence,

    #[error("information matrix is singular (sigma_min = {sigma_min:e})")]
    SingularInformationMatrix { sigma_min: f64 },

    #[error("sampling set is rank deficient (rank {rank} < bandwidth {bandwidth})")]
    RankDeficientSampling { rank: usize, bandwidth: usize },

    #[error("singular quantized design could not be repaired in {steps} fallback step(s)")]
    FallbackExhausted { steps: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
