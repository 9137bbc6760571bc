use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid activation: {0}")]
    InvalidActivation(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("network file {location}: {message}")]
    Parse { location: String, message: String },

    #[error("perturbation failed to reach full rank after {retries} retries (layer {layer})")]
    RankPerturbation { layer: usize, retries: usize },

    #[error("construction failed verification: measured gap {measured} exceeds epsilon {epsilon}")]
    Verification { measured: f64, epsilon: f64 },

    #[error("error budget infeasible at layer {layer}: {reason}")]
    BudgetInfeasible { layer: usize, reason: String },

    #[error("iteration hypotheses do not hold for {0}")]
    Hypotheses(String),

    #[error("certificate refused: {0}")]
    Refused(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
