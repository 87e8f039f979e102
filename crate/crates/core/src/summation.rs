//! Deterministic reductions.
//!
//! All floating-point accumulation in the crate goes through these helpers so
//! that results depend only on the input order, never on how work was split
//! across threads.

/// Leaves below this length are summed sequentially.
const LEAF: usize = 32;

/// Pairwise (tree) summation over a fixed index order.
pub fn tree_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    tree_sum(&values[..mid]) + tree_sum(&values[mid..])
}

/// Arithmetic mean via [`tree_sum`]. Returns NaN for an empty slice.
pub fn tree_mean(values: &[f64]) -> f64 {
    tree_sum(values) / values.len() as f64
}

/// Maps fixed-size chunks of `0..len` and combines the per-chunk results
/// with a tree whose shape depends only on `len` and `chunk`. Halves are
/// evaluated in parallel, so the result is identical for any worker count
/// while only O(depth) partial results are alive per worker.
pub fn chunked_tree_reduce<T, M, R>(len: usize, chunk: usize, map: M, reduce: R) -> Option<T>
where
    T: Send,
    M: Fn(std::ops::Range<usize>) -> T + Sync,
    R: Fn(T, T) -> T + Sync,
{
    if len == 0 {
        return None;
    }
    let chunk = chunk.max(1);
    Some(reduce_chunks(0, len.div_ceil(chunk), len, chunk, &map, &reduce))
}

fn reduce_chunks<T, M, R>(first: usize, last: usize, len: usize, chunk: usize, map: &M, reduce: &R) -> T
where
    T: Send,
    M: Fn(std::ops::Range<usize>) -> T + Sync,
    R: Fn(T, T) -> T + Sync,
{
    if last - first == 1 {
        return map(first * chunk..((first + 1) * chunk).min(len));
    }
    let mid = first + (last - first) / 2;
    let (a, b) = rayon::join(
        || reduce_chunks(first, mid, len, chunk, map, reduce),
        || reduce_chunks(mid, last, len, chunk, map, reduce),
    );
    reduce(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_sum_matches_exact_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(tree_sum(&v), 500_500.0);
        assert_eq!(tree_sum(&[]), 0.0);
    }

    #[test]
    fn tree_sum_is_more_accurate_than_naive_on_long_runs() {
        let v = vec![0.1_f64; 1 << 20];
        let exact = 0.1 * (1u64 << 20) as f64;
        assert!((tree_sum(&v) - exact).abs() < 1e-6);
    }

    #[test]
    fn chunked_reduce_independent_of_pool_size() {
        let data: Vec<f64> = (0..10_007).map(|i| (i as f64).sin() * 1e3).collect();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    chunked_tree_reduce(data.len(), 97, |r| tree_sum(&data[r]), |a, b| a + b)
                        .unwrap()
                })
        };
        assert_eq!(run(1).to_bits(), run(7).to_bits());
    }
}
