//! Command-line laboratory around `navier-core`: configuration, commands,
//! and CSV/JSON artifacts.

pub mod commands;
pub mod config;
pub mod output;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("computation failed: {0}")]
    Compute(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// 2 for usage errors, 4 for everything raised during compute or output.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Usage(_) => 2,
            _ => 4,
        }
    }
}

/// What a successful command prints and how it exits.
#[derive(Debug)]
pub struct Report {
    pub record: serde_json::Value,
    /// 0, or 3 when the result is inconclusive.
    pub code: u8,
}
