//! Kernel two-sample statistics: MMD and energy distance.

use ndarray::{concatenate, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::euclid::{check_dims, mean_cross_distance, means};
use crate::error::Result;
use crate::numerics::rng::sample_indices;

pub const BANDWIDTH_MAX_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Median pairwise distance of the pooled sample.
    Median,
    Fixed(f64),
}

/// Biased (V-statistic) MMD^2 with a linear kernel, `||mean(A) - mean(B)||^2`.
pub fn d_mmd_linear(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    check_dims(a, b)?;
    let diff = means(a) - means(b);
    Ok(diff.dot(&diff))
}

fn sq_dist(x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Median of pooled pairwise distances over at most 1000 points per side;
/// falls back to 1 when the median is 0.
pub fn median_bandwidth(a: ArrayView2<f64>, b: ArrayView2<f64>, seed: u64) -> f64 {
    let ia = sample_indices(a.nrows(), BANDWIDTH_MAX_POINTS, seed);
    let ib = sample_indices(b.nrows(), BANDWIDTH_MAX_POINTS, seed);
    let pooled = concatenate(Axis(0), &[a.select(Axis(0), &ia).view(), b.select(Axis(0), &ib).view()])
        .expect("matching columns");
    let m = pooled.nrows();
    let mut d = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            d.push(sq_dist(pooled.row(i), pooled.row(j)).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    let mid = d.len() / 2;
    let (_, &mut upper, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    let med = if d.len() % 2 == 1 {
        upper
    } else {
        let lower = d[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

fn mean_rbf(a: ArrayView2<f64>, b: ArrayView2<f64>, gamma: f64) -> f64 {
    let total: f64 = a
        .rows()
        .into_iter()
        .map(|x| b.rows().into_iter().map(|y| (-gamma * sq_dist(x, y)).exp()).sum::<f64>())
        .sum();
    total / (a.nrows() * b.nrows()) as f64
}

/// Biased MMD^2 with `k(x, y) = exp(-||x - y||^2 / (2 h^2))`, clamped at 0.
pub fn d_mmd_rbf(a: ArrayView2<f64>, b: ArrayView2<f64>, bandwidth: Bandwidth, seed: u64) -> Result<f64> {
    check_dims(a, b)?;
    let h = match bandwidth {
        Bandwidth::Median => median_bandwidth(a, b, seed),
        Bandwidth::Fixed(h) => h,
    };
    let gamma = 1.0 / (2.0 * h * h);
    let v = mean_rbf(a, a, gamma) + mean_rbf(b, b, gamma) - 2.0 * mean_rbf(a, b, gamma);
    Ok(v.max(0.0))
}

/// Energy distance (non-rooted V-statistic), clamped at 0.
pub fn d_energy(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    check_dims(a, b)?;
    let v = 2.0 * mean_cross_distance(a, b) - mean_cross_distance(a, a) - mean_cross_distance(b, b);
    Ok(v.max(0.0))
}
