//! Index-ordered parallel helpers.

use rayon::prelude::*;

/// Below this many items a scan runs sequentially.
pub const PAR_THRESHOLD: usize = 2048;

/// Order-preserving map, parallel for long inputs.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if items.len() >= PAR_THRESHOLD {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

/// Fallible order-preserving map; reports the error of the lowest failing index.
pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    map(items, f).into_iter().collect()
}

/// Index of the maximum. Values within a relative 1e-12 of the maximum count as
/// ties, resolved to the lowest index. NaN entries are ignored.
pub fn argmax(values: &[f64]) -> Option<(usize, f64)> {
    let max = values.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY && values.iter().all(|v| v.is_nan()) {
        return None;
    }
    let tol = 1e-12 * max.abs();
    values.iter().position(|&v| v >= max - tol).map(|i| (i, values[i]))
}

/// Index of the minimum with the same tie rule as [`argmax`].
pub fn argmin(values: &[f64]) -> Option<(usize, f64)> {
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    argmax(&neg).map(|(i, v)| (i, -v))
}
