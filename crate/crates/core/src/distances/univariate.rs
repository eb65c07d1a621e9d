//! Per-dimension divergences averaged over dimensions.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::euclid::check_dims;
use crate::error::Result;
use crate::numerics::{histogram_pair, histogram_pair_raw};

fn sorted_column(a: ArrayView2<f64>, d: usize) -> Vec<f64> {
    let mut v = a.column(d).to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn per_dim_mean(a: ArrayView2<f64>, b: ArrayView2<f64>, f: impl Fn(&[f64], &[f64]) -> Result<f64>) -> Result<f64> {
    check_dims(a, b)?;
    let n = a.ncols();
    let mut total = 0.0;
    for d in 0..n {
        total += f(&a.column(d).to_vec(), &b.column(d).to_vec())?;
    }
    Ok(total / n as f64)
}

/// Exact 1-D Wasserstein-1 between two empirical distributions: the L1
/// distance between their quantile functions, integrated piecewise over the
/// merged breakpoints `i/n` and `j/m`.
pub fn wasserstein_1d(x: &[f64], y: &[f64]) -> f64 {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    wasserstein_sorted(&xs, &ys)
}

pub(crate) fn wasserstein_sorted(xs: &[f64], ys: &[f64]) -> f64 {
    let (n, m) = (xs.len() as u128, ys.len() as u128);
    // positions measured in units of 1 / (n m)
    let scale = (n * m) as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos: u128 = 0;
    let mut total = 0.0;
    while (i as u128) < n && (j as u128) < m {
        let next_x = (i as u128 + 1) * m;
        let next_y = (j as u128 + 1) * n;
        let next = next_x.min(next_y);
        total += (xs[i] - ys[j]).abs() * ((next - pos) as f64 / scale);
        pos = next;
        if next_x == next {
            i += 1;
        }
        if next_y == next {
            j += 1;
        }
    }
    total
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_x - F_y|`.
pub fn ks_1d(x: &[f64], y: &[f64]) -> f64 {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as u128, ys.len() as u128);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best: u128 = 0;
    while i < xs.len() || j < ys.len() {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            j += 1;
        }
        let (fx, fy) = (i as u128 * m, j as u128 * n);
        best = best.max(fx.abs_diff(fy));
    }
    best as f64 / (n * m) as f64
}

pub fn d_wasserstein(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    check_dims(a, b)?;
    let n = a.ncols();
    let total: f64 = (0..n)
        .map(|d| wasserstein_sorted(&sorted_column(a, d), &sorted_column(b, d)))
        .sum();
    Ok(total / n as f64)
}

pub fn d_ks(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    per_dim_mean(a, b, |x, y| Ok(ks_1d(x, y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistKind {
    Kl,
    JensenShannon,
    Hellinger,
    TotalVariation,
}

pub fn js_divergence(p: &[f64], q: &[f64]) -> f64 {
    let term = |a: f64, mid: f64| if a > 0.0 { a * (a / mid).log2() } else { 0.0 };
    let v: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let mid = 0.5 * (a + b);
            0.5 * term(a, mid) + 0.5 * term(b, mid)
        })
        .sum();
    v.clamp(0.0, 1.0)
}

/// `sqrt(1 - sum sqrt(p q))`, evaluated in the equivalent form
/// `sqrt(sum (sqrt p - sqrt q)^2 / 2)`, which is exactly zero for `p = q`.
pub fn hellinger(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p.iter().zip(q).map(|(&a, &b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
    (0.5 * s).sqrt().min(1.0)
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Directed KL(p || q) in nats; inputs must be strictly positive.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(&a, &b)| a * (a / b).ln()).sum::<f64>().max(0.0)
}

/// Jeffreys-symmetrised KL, `(KL(p||q) + KL(q||p)) / 2`.
pub fn kl_symmetric(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(&a, &b)| (a - b) * (a / b).ln()).sum::<f64>().max(0.0)
}

/// Histogram divergence per dimension, averaged. JS, Hellinger and TV use
/// the unsmoothed shared-edge histograms; KL uses the smoothed ones.
pub fn d_hist_divergence(
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
    kind: HistKind,
    bins: usize,
    directed_kl: bool,
) -> Result<f64> {
    per_dim_mean(a, b, |x, y| {
        Ok(match kind {
            HistKind::Kl => {
                let h = histogram_pair(x, y, bins)?;
                if directed_kl {
                    kl_divergence(&h.p, &h.q)
                } else {
                    kl_symmetric(&h.p, &h.q)
                }
            }
            _ => {
                let h = histogram_pair_raw(x, y, bins)?;
                match kind {
                    HistKind::JensenShannon => js_divergence(&h.p, &h.q),
                    HistKind::Hellinger => hellinger(&h.p, &h.q),
                    _ => total_variation(&h.p, &h.q),
                }
            }
        })
    })
}
