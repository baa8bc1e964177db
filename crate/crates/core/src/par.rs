//! Order-preserving parallel map.
//!
//! Every reduction in the crate goes through [`map_indexed`]: work items are
//! evaluated (in parallel when the `parallel` feature is on) and returned in
//! index order, so the caller's sequential fold is independent of the number
//! of worker threads.

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
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

/// Pairwise summation; keeps the rounding of long quadrature sums at
/// O(log n) ulps and fixes the association order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
