//! Replicate-parallel helpers. Results are always returned in replicate
//! order, so downstream folds are independent of the worker count.

use std::ops::Range;

use rayon::prelude::*;

/// Replicates per work unit. Fixed so that floating point partial sums are
/// formed identically under any thread count.
pub const CHUNK: u64 = 1024;

pub fn map_chunks<A, F>(n: u64, chunk: u64, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(Range<u64>) -> A + Sync + Send,
{
    let chunk = chunk.max(1);
    let count = n.div_ceil(chunk);
    (0..count)
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            f(start..(start + chunk).min(n))
        })
        .collect()
}

pub fn map_replicates<T, F>(range: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    range.into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_range_in_order() {
        let parts = map_chunks(10, 4, |r| r.collect::<Vec<_>>());
        assert_eq!(parts, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7], vec![8, 9]]);
        assert!(map_chunks(0, 4, |r| r.count()).is_empty());
    }
}
