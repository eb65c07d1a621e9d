//! Shared fixtures for the benchmarks.

use dsim_core::data_io::generate_drift_family;
use dsim_core::Dataset;
use ndarray::Array2;

/// Two members of a small drift family, `m` rows of dimension `n` each.
pub fn pair(m: usize, n: usize) -> (Dataset, Dataset) {
    let mut fam = generate_drift_family(2, n, m, 1.0, 11).expect("valid family");
    let b = fam.pop().expect("two datasets");
    let a = fam.pop().expect("two datasets");
    (a, b)
}

/// Stacked rows of a drift family, for embedding and kNN benches.
pub fn corpus(k: usize, m: usize, n: usize) -> Array2<f64> {
    let fam = generate_drift_family(k, n, m, 1.0, 13).expect("valid family");
    let views: Vec<_> = fam.iter().map(|d| d.view()).collect();
    ndarray::concatenate(ndarray::Axis(0), &views).expect("same width")
}
