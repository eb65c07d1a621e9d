//! Lloyd's k-means with k-means++ seeding and best-of-n restarts.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::rng::{derive_seed, rng};
use crate::error::{Error, Result};

pub const DEFAULT_N_INIT: usize = 4;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KMeansResult {
    pub centroids: Array2<f64>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

pub fn kmeans(points: ArrayView2<f64>, k: usize, seed: u64) -> Result<KMeansResult> {
    kmeans_with(points, k, seed, DEFAULT_N_INIT, DEFAULT_MAX_ITER)
}

pub fn kmeans_with(
    points: ArrayView2<f64>,
    k: usize,
    seed: u64,
    n_init: usize,
    max_iter: usize,
) -> Result<KMeansResult> {
    let m = points.nrows();
    if k == 0 || k > m {
        return Err(Error::param("k", format!("need 1 <= k <= M = {m}, got {k}")));
    }
    let mut best: Option<KMeansResult> = None;
    for run in 0..n_init.max(1) {
        let init = plus_plus_init(points, k, derive_seed(seed, &[run as u64]));
        let res = lloyd(points, init, max_iter);
        if best.as_ref().is_none_or(|b| res.inertia < b.inertia) {
            best = Some(res);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_init(points: ArrayView2<f64>, k: usize, seed: u64) -> Array2<f64> {
    let (m, n) = points.dim();
    let mut rng = rng(seed);
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; m];
    let first = rng.random_range(0..m);
    chosen.push(first);
    taken[first] = true;
    let mut d2: Vec<f64> = (0..m)
        .map(|i| sq_dist(points.row(i), points.row(first)))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                if target < w {
                    pick = Some(i);
                    break;
                }
                target -= w;
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            // every remaining point coincides with a chosen centre
            let free: Vec<usize> = (0..m).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        taken[next] = true;
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), points.row(next)));
        }
    }
    let mut c = Array2::zeros((k, n));
    for (r, &i) in chosen.iter().enumerate() {
        c.row_mut(r).assign(&points.row(i));
    }
    c
}

/// Assigns each point to its nearest centroid (lowest index on ties).
/// Returns (changed, inertia).
fn assign(points: ArrayView2<f64>, centroids: &Array2<f64>, labels: &mut [usize]) -> (bool, f64) {
    let mut changed = false;
    let mut inertia = 0.0;
    for (i, p) in points.rows().into_iter().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, cent) in centroids.rows().into_iter().enumerate() {
            let d = sq_dist(p, cent);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        if labels[i] != best {
            labels[i] = best;
            changed = true;
        }
        inertia += best_d;
    }
    (changed, inertia)
}

fn lloyd(points: ArrayView2<f64>, mut centroids: Array2<f64>, max_iter: usize) -> KMeansResult {
    let (m, n) = points.dim();
    let k = centroids.nrows();
    let mut labels = vec![usize::MAX; m];
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        let (changed, inertia) = assign(points, &centroids, &mut labels);
        trace.push(inertia);
        if !changed {
            break;
        }
        let mut sums = Array2::<f64>::zeros((k, n));
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let mut row = sums.row_mut(l);
            row += &points.row(i);
        }
        for c in 0..k {
            // empty clusters keep their previous centre
            if counts[c] > 0 {
                let mean = sums.row(c).mapv(|x| x / counts[c] as f64);
                centroids.row_mut(c).assign(&mean);
            }
        }
    }
    let (_, inertia) = assign(points, &centroids, &mut labels);
    if trace.last() != Some(&inertia) {
        trace.push(inertia);
    }
    KMeansResult {
        centroids,
        labels,
        inertia,
        inertia_trace: trace,
    }
}
