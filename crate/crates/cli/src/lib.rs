//! Command-line lab for special flows over irrational rotations: run
//! configuration, replayable artifacts and a rayon executor for the core
//! drivers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod config;
pub mod pool;
pub mod run;

use artifact::{config_hash, read_header, Artifact};
use config::RunConfig;
use pool::Pool;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input or configuration (exit 2).
    #[error("{0}")]
    Config(String),
    /// Failure while running (exit 1).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

/// Result of replaying an artifact.
#[derive(Debug)]
pub struct Replay {
    pub config: RunConfig,
    /// Worker count actually used for the re-run.
    pub workers: usize,
    pub identical: bool,
    /// Name of the regenerated artifact that matched, if any.
    pub matched: Option<String>,
}

/// Re-runs the config stored in `bytes` and compares the regenerated
/// artifacts with it. `bytes` may be one artifact file or the full stdout
/// of a run. `workers` overrides the recorded worker count for the pool
/// only; the config (and so the header) stays as recorded, since results
/// do not depend on the worker count.
pub fn replay(bytes: &[u8], workers: Option<usize>) -> Result<Replay, CliError> {
    let header = read_header(bytes)?;
    if config_hash(&header.config) != header.config_hash {
        return Err(CliError::Config("artifact header: config hash does not match the stored config".into()));
    }
    let config = header.config;
    let pool = Pool::new(workers.unwrap_or(config.workers).max(1)).map_err(|e| CliError::Runtime(e.to_string()))?;
    let out = run::run(&config, &pool)?;
    let all: Vec<u8> = out.artifacts.iter().flat_map(|a| a.bytes.iter().copied()).collect();
    let matched = if all == bytes {
        Some("stdout".to_string())
    } else {
        out.artifacts.iter().find(|a: &&Artifact| a.bytes == bytes).map(|a| a.name.clone())
    };
    Ok(Replay { config, workers: pool.workers(), identical: matched.is_some(), matched })
}
