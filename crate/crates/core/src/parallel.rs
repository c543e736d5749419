use std::ops::Range;

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

fn pool(workers: usize) -> Option<ThreadPool> {
    ThreadPoolBuilder::new().num_threads(workers).build().ok()
}

/// Runs `job` on a dedicated pool of `workers` threads (0 = rayon default).
pub(crate) fn run_with_workers<R, F>(workers: usize, job: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match pool(workers) {
        Some(pool) => pool.install(job),
        None => job(),
    }
}

/// Maps `map` over `indices` in parallel, handing results to `sink` strictly
/// in index order. Work is cut into fixed-size chunks so the order in which
/// results reach `sink` (and anything it folds) does not depend on the
/// number of workers.
pub(crate) fn ordered_chunks<T, E, M, S>(
    indices: Range<u64>,
    workers: usize,
    chunk: u64,
    map: M,
    mut sink: S,
) -> Result<(), E>
where
    T: Send,
    M: Fn(u64) -> T + Sync,
    S: FnMut(u64, T) -> Result<(), E>,
{
    let pool = pool(workers);
    let chunk = chunk.max(1);
    let mut start = indices.start;
    while start < indices.end {
        let end = (start + chunk).min(indices.end);
        let run = || (start..end).into_par_iter().map(&map).collect::<Vec<T>>();
        let batch = match &pool {
            Some(pool) => pool.install(run),
            None => run(),
        };
        for (offset, item) in batch.into_iter().enumerate() {
            sink(start + offset as u64, item)?;
        }
        start = end;
    }
    Ok(())
}
