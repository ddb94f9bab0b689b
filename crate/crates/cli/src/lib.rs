//! Command-line front end: file ingestion, sweeps, heatmaps and scatter data.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or validation
//! failure.

pub mod commands;
pub mod config;
pub mod formats;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed files, invalid configuration.
    #[error("{0}")]
    Usage(String),
    /// A self-check ran and found a mismatch.
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Verification(_) => 1,
        }
    }
}

impl From<flock_reid::Error> for CliError {
    fn from(e: flock_reid::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub const THREADS_ENV: &str = "FLOCK_REID_THREADS";

/// Caps the global worker pool from `FLOCK_REID_THREADS`; unset or 0 keeps
/// the default.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={raw:?} is not a thread count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?;
    }
    Ok(())
}
