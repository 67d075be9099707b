//! Data-parallel loop helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the helpers fan work out over
//! rayon; without it they run plain loops. Both paths produce bitwise
//! identical results: per-item work is independent and reductions collect
//! per-item partials that are combined in index order, so results do not
//! depend on the thread count.

/// Apply `f` to every row of a row-major buffer.
#[cfg(feature = "parallel")]
pub fn for_each_row_mut<T, F>(values: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    use rayon::prelude::*;
    values
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(j, row)| f(j, row));
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_row_mut<T, F>(values: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    for (j, row) in values.chunks_mut(width).enumerate() {
        f(j, row);
    }
}

/// Map rows to partial values, then fold them in row order.
#[cfg(feature = "parallel")]
pub fn map_rows_sum<T, F>(values: &[T], width: usize, f: F) -> f64
where
    T: Sync,
    F: Fn(usize, &[T]) -> f64 + Sync,
{
    use rayon::prelude::*;
    let partials: Vec<f64> = values
        .par_chunks(width)
        .enumerate()
        .map(|(j, row)| f(j, row))
        .collect();
    partials.iter().sum()
}

#[cfg(not(feature = "parallel"))]
pub fn map_rows_sum<T, F>(values: &[T], width: usize, f: F) -> f64
where
    T: Sync,
    F: Fn(usize, &[T]) -> f64 + Sync,
{
    values
        .chunks(width)
        .enumerate()
        .map(|(j, row)| f(j, row))
        .sum()
}

/// Map indexed items into a fresh vector, preserving order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Run `f` on a pool with the given thread count when parallel, otherwise
/// just call it. `threads = 0` means "use the default pool".
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_sum_matches_sequential() {
        let values: Vec<f64> = (0..1024).map(|i| (i as f64 * 0.37).sin()).collect();
        let par = map_rows_sum(&values, 32, |_, row| row.iter().sum());
        let seq: f64 = values
            .chunks(32)
            .map(|row| row.iter().sum::<f64>())
            .sum();
        assert_eq!(par, seq);
    }

    #[test]
    fn rows_are_visited_once() {
        let mut values = vec![0.0f64; 128];
        for_each_row_mut(&mut values, 16, |j, row| {
            for v in row.iter_mut() {
                *v += j as f64 + 1.0;
            }
        });
        assert!(values.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn map_indexed_preserves_order() {
        let out = map_indexed(100, |i| i * i);
        for (i, v) in out.iter().enumerate() {
            assert_eq!(*v, i * i);
        }
    }
}
