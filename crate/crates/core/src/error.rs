use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot compose an empty list of optical elements")]
    EmptyComposition,

    #[error("state is not normalized: norm^2 = {0}")]
    NotNormalized(f64),

    #[error("invalid probability for {name}: {value} (expected a value in [0, 1])")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid must contain at least one point")]
    EmptyGrid,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
