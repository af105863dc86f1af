//! Execution facade for the data-parallel inner loops.
//!
//! With the `parallel` feature (the default) these fan out over the
//! rayon thread pool; without it they run sequentially with identical
//! results. Callers must keep the per-index work independent and the
//! aggregation order-insensitive.

#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(count: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..count).map(f).collect()
}
