//! Chunk-level parallelism shims. With the `parallel` feature (default) work
//! fans out over rayon; without it (e.g. wasm builds) the same closures run
//! serially. Outputs are written into disjoint, pre-assigned slices, so
//! results never depend on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn maybe_par_for_each<T, F>(items: Vec<T>, f: F)
where
    T: Send,
    F: Fn(T) + Sync + Send,
{
    items.into_par_iter().for_each(f);
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn maybe_par_for_each<T, F>(items: Vec<T>, f: F)
where
    F: Fn(T),
{
    items.into_iter().for_each(f);
}

#[cfg(feature = "parallel")]
pub(crate) fn maybe_par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn maybe_par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}
