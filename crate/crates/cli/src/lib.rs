//! File formats, job files, checkpoints and command implementations for `tuttenet`.

pub mod checkpoint;
pub mod commands;
pub mod error;
pub mod geometry;
pub mod job;

pub use checkpoint::Checkpoint;
pub use error::{CliError, Result};
pub use geometry::{load_geometry, save_geometry, Geometry, Normalization};
pub use job::{JobFile, Workflow};

/// Environment variable that fixes the worker thread count.
pub const THREADS_ENV: &str = "TUTTENET_THREADS";

/// Applies [`THREADS_ENV`] to the global thread pool, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}: expected a positive integer, found {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("{THREADS_ENV}: {e}")))
}
