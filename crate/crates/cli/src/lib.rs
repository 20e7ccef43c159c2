//! The `shapga` batch pipeline: `extract` turns record files into a feature
//! matrix, `select` ranks features, `evaluate` cross-validates classifiers
//! on a selection, and `report` tallies selections by signal source.
//!
//! Each command reads everything it needs, computes, and writes all of its
//! outputs at the end, so a failed run leaves no partial files behind.

pub mod config;
pub mod evaluate;
pub mod extract;
pub mod report;
pub mod select;

use std::path::Path;

use thiserror::Error;

pub use config::{Overrides, RunConfig, SelectionMethod};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] shapga::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for bad input or configuration, 2 for failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Core(e) if e.is_validation() => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub(crate) fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::Validation(format!("{what} {} does not exist", path.display())));
    }
    Ok(())
}

/// Writes every `(name, bytes)` pair under `dir`, creating it if needed.
pub(crate) fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

/// Runs `f` on a rayon pool with `workers` threads (0 = one per core).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}
