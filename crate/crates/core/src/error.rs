use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension must be at least 1, got {0}")]
    InvalidDimension(u32),

    #[error("unknown rule specification `{0}`")]
    UnknownRule(String),

    #[error("window radius {radius} cannot hold the light cone at time {next_time}")]
    WindowTooSmall { radius: u32, next_time: u64 },

    #[error("rule lattice {rule} does not match window lattice {window}")]
    LatticeMismatch { rule: String, window: String },

    #[error("window needs {requested} bytes, memory cap is {cap} bytes")]
    ResourceLimit { requested: u64, cap: u64 },

    #[error("count series reaches n = {available}, but n = {needed} is required")]
    InsufficientHorizon { needed: u64, available: u64 },

    #[error("alpha = {0} is not in (0, 1) \\ {{1/2}}")]
    InvalidAlpha(String),

    #[error("{0}")]
    OutOfRange(String),
}

pub type Result<T> = std::result::Result<T, Error>;
