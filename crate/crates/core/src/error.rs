use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("cut-off construction failed: {0}")]
    Cutoff(String),

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("CFL violation: dt = {dt:e} exceeds the {which} limit {limit:e}")]
    Cfl { which: &'static str, dt: f64, limit: f64 },

    #[error("positivity failure: u reached {min:e} after a step (clip tolerance {tolerance:e})")]
    Negativity { min: f64, tolerance: f64 },

    #[error("Picard iteration did not converge in {iterations} iterations (last distance {distance:e})")]
    PicardMaxIters { iterations: usize, distance: f64 },

    #[error("Picard iteration diverging: contraction factors {factors:?}")]
    PicardDivergence { factors: Vec<f64> },

    #[error("time step underflow at t = {t}: dt = {dt:e}")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
