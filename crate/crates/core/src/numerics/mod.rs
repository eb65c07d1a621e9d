//! Numeric kernels shared by the rest of the crate.

pub mod kmeans;
pub mod knn;
pub mod rng;
pub mod stats;
pub mod svd;

pub use kmeans::{kmeans, kmeans_with, KMeansResult};
pub use knn::{knn_search, pair_distance, KnnGraph, KnnMetric};
pub use stats::{
    histogram_pair, histogram_pair_raw, pearson, spearman, EmpiricalQuantile, HistogramPair,
};
pub use svd::{truncated_svd, SvdResult};
