//! Data-parallel map helpers.
//!
//! Angle sweeps, parameter grids and randomized trials are independent
//! point evaluations. [`par_map`] runs them on the rayon pool when the
//! `parallel` feature is enabled and degrades to a plain sequential map
//! without it; either way the output order matches the input order, so
//! callers produce identical results regardless of thread count.
//! [`seq_map`] is always sequential and exists so benchmarks can compare
//! the two paths in one binary.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

pub fn seq_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Pin the global thread pool size (e.g. from an environment variable).
/// No-op without the `parallel` feature; calling twice is an error in
/// rayon, so wire this up once at process start.
#[cfg(feature = "parallel")]
pub fn configure_threads(n: usize) -> std::result::Result<(), String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_n: usize) -> std::result::Result<(), String> {
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_preserves_order() {
        let squares = par_map((0..1000).collect(), |i: i64| i * i);
        assert_eq!(squares, seq_map((0..1000).collect(), |i: i64| i * i));
    }
}
