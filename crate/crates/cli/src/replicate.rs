//! Replica execution on a fixed-size worker pool.
//!
//! Replica `k` of a run with master seed `S` draws all of its randomness from
//! the ChaCha8 streams `(S, role << 48 | k)`. Work is cut into contiguous
//! chunks, one per worker, and results are returned in replica order, so
//! every downstream reduction sees the same sequence for any worker count.

use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Sizes of `workers` contiguous chunks covering `n` replicas; the first
/// `n % workers` chunks take one extra replica.
pub fn chunk_sizes(n: usize, workers: usize) -> Vec<usize> {
    let workers = workers.max(1);
    (0..workers)
        .map(|w| n / workers + usize::from(w < n % workers))
        .collect()
}

/// Runs `f(k)` for `k in 0..n` on `workers` threads and returns the results
/// in order of `k`.
pub fn replicate<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    if workers == 0 {
        return Err(CliError::Usage("workers: must be >= 1".to_string()));
    }
    let mut ranges = Vec::with_capacity(workers);
    let mut start = 0;
    for size in chunk_sizes(n, workers) {
        ranges.push(start..start + size);
        start += size;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build worker pool: {e}")))?;
    let chunks: Vec<Result<Vec<T>>> = pool.install(|| {
        ranges
            .into_par_iter()
            .map(|r| r.map(|k| f(k as u64)).collect::<Result<Vec<T>>>())
            .collect()
    });
    let mut out = Vec::with_capacity(n);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_every_replica() {
        for n in 0..40 {
            for w in 1..9 {
                let c = chunk_sizes(n, w);
                assert_eq!(c.len(), w);
                assert_eq!(c.iter().sum::<usize>(), n);
                assert!(c.iter().max().unwrap() - c.iter().min().unwrap() <= 1);
            }
        }
    }

    #[test]
    fn results_are_ordered_for_any_worker_count() {
        let one = replicate(23, 1, |k| Ok(k * k)).unwrap();
        let many = replicate(23, 8, |k| Ok(k * k)).unwrap();
        assert_eq!(one, many);
        assert_eq!(one.len(), 23);
        assert!(replicate(3, 0, Ok).is_err());
    }
}
