use std::io;

use thiserror::Error;

/// Everything that can go wrong inside the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("pattern matrix entry ({row}, {col}) is negative or non-finite: {value}")]
    InvalidPatternEntry { row: usize, col: usize, value: f64 },

    #[error("index {index} out of range for {len} paths")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate allocation: combined subchannel has zero Frobenius norm")]
    DegenerateAllocation,

    #[error("path {index} has zero gain but a positive allocation")]
    ZeroGainPath { index: usize },

    #[error("clipping to the nonnegative orthant produced the zero vector")]
    DegenerateClip,

    #[error("grid oracle supports at most {max} subchannels, got {got}")]
    GridTooLarge { max: usize, got: usize },

    #[error("every trial failed for scheme {scheme} at sweep value {sweep_value}")]
    AllTrialsDegenerate { scheme: String, sweep_value: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status for the command-line tool: 2 for configuration
    /// problems, 3 when every trial degenerated, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::Json(_) => 2,
            Error::AllTrialsDegenerate { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
