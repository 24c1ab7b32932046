//! Sequential / data-parallel dispatch.
//!
//! Every parallel loop in the crate goes through [`Execution::map_chunks`] or
//! [`Execution::map`]. Work is split into fixed-size chunks and per-chunk
//! results come back in chunk order, so reductions performed by the caller are
//! bitwise identical regardless of thread count or of which variant ran.

use serde::{Deserialize, Serialize};

/// Chunk length used for per-dyad reductions.
pub const DYAD_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing; falls back to sequential without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    /// True when this variant will actually run on the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Apply `f` to consecutive chunks of `items` and return the results in
    /// chunk order.
    pub fn map_chunks<T, R, F>(self, items: &[T], chunk: usize, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&[T]) -> R + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.par_chunks(chunk).map(f).collect();
        }
        items.chunks(chunk).map(f).collect()
    }

    /// Apply `f` to each index in `0..n`, preserving order.
    pub fn map<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

/// Size the global worker pool. Has no effect without the `parallel` feature
/// and fails if the pool was already initialised.
pub fn init_threads(n: usize) -> crate::error::Result<()> {
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| crate::error::Error::invalid(format!("thread pool: {e}")))?;
    let _ = n;
    Ok(())
}
