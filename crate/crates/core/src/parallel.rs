//! Trial-level parallelism with thread-count-independent results.
//!
//! Trials are split into fixed-size chunks whose boundaries depend only on the
//! trial count. Each chunk is reduced sequentially and chunk results come back
//! in chunk order, so the caller's final merge is identical for any pool size.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable consulted when no explicit thread count is given.
pub const THREADS_ENV: &str = "EIGENCHAOS_THREADS";

/// Trials per reduction chunk.
pub const CHUNK: u64 = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Parallelism {
    threads: Option<usize>,
}

impl Parallelism {
    pub fn with_threads(threads: usize) -> Self {
        Self { threads: Some(threads.max(1)) }
    }

    /// Explicit count if given, else `EIGENCHAOS_THREADS`, else rayon's default.
    pub fn resolve(explicit: Option<usize>) -> Self {
        let threads = explicit.or_else(|| {
            std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok())
        });
        Self { threads: threads.map(|t| t.max(1)) }
    }

    pub fn threads(&self) -> Option<usize> {
        self.threads
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R> {
        match self.threads {
            None => Ok(f()),
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

/// Run `f` over `[0, trials)` in chunks of [`CHUNK`], returning per-chunk
/// results in chunk order.
pub fn chunked<A, F>(trials: u64, f: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(Range<u64>) -> Result<A> + Sync + Send,
{
    let nchunks = trials.div_ceil(CHUNK);
    (0..nchunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(trials)))
        .collect()
}

/// Per-trial map preserving trial order.
pub fn map_trials<T, F>(trials: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_results_are_ordered() {
        let out = Parallelism::with_threads(3)
            .install(|| chunked(1000, |r| Ok(r.start)).unwrap())
            .unwrap();
        let expected: Vec<u64> = (0..1000u64.div_ceil(CHUNK)).map(|c| c * CHUNK).collect();
        assert_eq!(out, expected);
    }
}
