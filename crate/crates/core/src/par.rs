//! Data-parallel kernels with a sequential fallback.
//!
//! With the `parallel` feature (default) the `*_into`/`map`/`sum` helpers
//! run on the rayon pool; without it they run sequentially. The `_seq`
//! variants are always sequential and exist so the benches can compare
//! both paths from a single build.
//!
//! Reductions are computed over fixed-size chunks whose partial sums are
//! combined in index order, so results are bit-identical regardless of the
//! number of threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for deterministic reductions.
pub const CHUNK: usize = 4096;

/// Fill `out[i] = f(i)`.
pub fn fill_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    }
    #[cfg(not(feature = "parallel"))]
    fill_indexed_seq(out, f)
}

pub fn fill_indexed_seq<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64,
{
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
}

/// Map `0..n` to a vector.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Deterministic `sum_i f(i)` for `i in 0..n`.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = map_range(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    });
    partial.into_iter().sum()
}

pub fn sum_indexed_seq<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    let chunks = n.div_ceil(CHUNK);
    let mut total = 0.0;
    for c in 0..chunks {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        total += (lo..hi).map(&f).sum::<f64>();
    }
    total
}

/// Deterministic max of `f(i)`; returns `-inf` for `n == 0`.
pub fn max_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = map_range(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi).map(&f).fold(f64::NEG_INFINITY, f64::max)
    });
    partial.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    -max_indexed(n, |i| -f(i))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_indexed(a.len(), |i| a[i] * b[i])
}

pub fn dot_seq(a: &[f64], b: &[f64]) -> f64 {
    sum_indexed_seq(a.len(), |i| a[i] * b[i])
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    #[cfg(feature = "parallel")]
    {
        y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += alpha * xi);
    }
    #[cfg(not(feature = "parallel"))]
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Apply `f` to each element together with its index.
pub fn update_indexed<F>(v: &mut [f64], f: F)
where
    F: Fn(usize, f64) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        v.par_iter_mut().enumerate().for_each(|(i, x)| *x = f(i, *x));
    }
    #[cfg(not(feature = "parallel"))]
    for (i, x) in v.iter_mut().enumerate() {
        *x = f(i, *x);
    }
}

/// Configure the global pool. Has no effect without the `parallel` feature,
/// or when the pool was already initialised.
pub fn init_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_are_chunk_deterministic() {
        let v: Vec<f64> = (0..10_000).map(|i| (i as f64).sin() * 1e-3 + 1.0).collect();
        assert_eq!(sum_indexed(v.len(), |i| v[i]), sum_indexed_seq(v.len(), |i| v[i]));
        assert_eq!(dot(&v, &v), dot_seq(&v, &v));
    }

    #[test]
    fn empty_reductions() {
        assert_eq!(sum_indexed(0, |_| 1.0), 0.0);
        assert_eq!(max_indexed(0, |_| 1.0), f64::NEG_INFINITY);
    }
}
