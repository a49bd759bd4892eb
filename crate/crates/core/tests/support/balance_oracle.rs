//! Order statistics by rank counting, without sorting.

#![allow(dead_code)]

/// The k-th smallest value (0-based): the value `v` with fewer than `k + 1`
/// values strictly below it and at least `k + 1` values at or below it.
pub fn kth_smallest(values: &[f64], k: usize) -> f64 {
    *values
        .iter()
        .find(|&&v| {
            let below = values.iter().filter(|&&u| u < v).count();
            let at_or_below = values.iter().filter(|&&u| u <= v).count();
            below <= k && k < at_or_below
        })
        .expect("k within range")
}

pub fn median(values: &[f64]) -> f64 {
    let n = values.len();
    if n % 2 == 1 {
        kth_smallest(values, n / 2)
    } else {
        (kth_smallest(values, n / 2 - 1) + kth_smallest(values, n / 2)) / 2.0
    }
}
