use chrono::{DateTime, Utc};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MinerError {
    #[error("authentication failed (HTTP {status}); set GITHUB_TOKEN to a valid token")]
    Auth { status: u16 },
    #[error("rate limited until {reset}")]
    RateLimited { reset: DateTime<Utc> },
    #[error("not found: {url}")]
    NotFound { url: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("cache error: {0}")]
    Cache(#[from] std::io::Error),
    #[error("could not decode response from {url}: {msg}")]
    Decode { url: String, msg: String },
    #[error("invalid commit sha {0:?}")]
    InvalidSha(String),
    #[error("invalid repository reference {0:?}")]
    InvalidRepo(String),
}

impl MinerError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            MinerError::Auth { .. } => 1,
            MinerError::RateLimited { .. } => 2,
            _ => 3,
        }
    }
}
