use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid offset set: {0}")]
    InvalidOffsetSet(String),

    #[error("offset vector has {got} entries but the scenario has {expected} LPNs")]
    OffsetLength { expected: usize, got: usize },

    #[error("offset level {level} at LPN position {position} is outside an offset set of size {size}")]
    OffsetLevel {
        position: usize,
        level: usize,
        size: usize,
    },

    #[error("offset {0} dB is not a member of the offset set")]
    UnknownOffset(f64),

    #[error("UE {ue} has zero gain to every eligible cell")]
    UnreachableUe { ue: usize },

    #[error("invalid load vector: {0}")]
    InvalidLoad(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid tabu search config: {0}")]
    InvalidTsoConfig(String),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
