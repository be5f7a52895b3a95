//! Data-parallel batch evaluation with an always-available sequential
//! fallback.
//!
//! Core capabilities:
//! - `map_indexed` / `try_map_indexed`: evaluate a pure function over an
//!   index range, in parallel (rayon) when the default `parallel` feature is
//!   enabled, sequentially otherwise; results are always in index order.
//! - `map_indexed_seq` / `try_map_indexed_seq`: the sequential path,
//!   compiled unconditionally so benchmarks can compare both.
//! - Fallible maps return the error of the *lowest* failing index regardless
//!   of thread scheduling, so error reporting is deterministic across the
//!   feature flag and across thread counts.
//!
//! Callers that mix randomness with parallelism must generate their random
//! inputs sequentially first and only parallelize the pure evaluation; every
//! use in this crate follows that rule.

use crate::error::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is active.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is active.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    map_indexed_seq(n, f)
}

/// Sequential map over `0..n`; always available for comparison runs.
pub fn map_indexed_seq<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Fallible map over `0..n`; on failure returns the error with the lowest
/// index, independent of scheduling.
#[cfg(feature = "parallel")]
pub fn try_map_indexed<T: Send>(
    n: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = (0..n).into_par_iter().map(f).collect();
    collect_first_error(results)
}

/// Fallible map over `0..n`; on failure returns the error with the lowest
/// index, independent of scheduling.
#[cfg(not(feature = "parallel"))]
pub fn try_map_indexed<T: Send>(
    n: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    try_map_indexed_seq(n, f)
}

/// Sequential fallible map over `0..n`.
pub fn try_map_indexed_seq<T>(n: usize, f: impl Fn(usize) -> Result<T>) -> Result<Vec<T>> {
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
fn collect_first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }
    Ok(out)
}
