//! Monte Carlo harness, run-configuration files and result tables for the
//! `wienerjam-core` jammer-design library.

pub mod config;
pub mod error;
pub mod gradcheck;
pub mod harness;
pub mod output;

pub use error::{HarnessError, Result};

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(error::HarnessError::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| error::HarnessError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
