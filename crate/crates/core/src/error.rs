use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("rank error: {0}")]
    Rank(String),
    #[error("singular projection: {0}")]
    Singular(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid value: {0}")]
    Value(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("zero-norm reference column {0}")]
    ZeroNorm(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solution blew up at t = {t}: |value| = {magnitude:e}")]
    Blowup { t: f64, magnitude: f64 },
    #[error("CFL bound needs {substeps} sub-steps per output interval (limit 100000)")]
    Cfl { substeps: u64 },
    #[error("malformed snapshot file: {0}")]
    Format(String),
    #[error("CSV schema mismatch: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Value(_) => 2,
            Error::Io(_) | Error::Format(_) | Error::Schema(_) | Error::Csv(_) | Error::Json(_) => 4,
            _ => 3,
        }
    }
}
