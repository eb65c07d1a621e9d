//! Direct-from-definition reference implementations used by the oracle and
//! acceptance tests. Everything here is written with plain loops over
//! `Vec<Vec<f64>>` (or nalgebra for linear algebra) and shares no code
//! with the library beyond the seeded helpers it is explicitly handed.

#![allow(dead_code)]

use dsim_core::numerics::rng::rng;
use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, Normal, StandardNormal};

pub type Rows = Vec<Vec<f64>>;

pub fn rows(a: ArrayView2<f64>) -> Rows {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

pub fn gaussian(m: usize, n: usize, mean: f64, scale: f64, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    let d = Normal::new(mean, scale).unwrap();
    Array2::from_shape_fn((m, n), |_| d.sample(&mut r))
}

/// Gaussian with a random per-feature shift and scale, so pairs differ in
/// location, spread and shape.
pub fn random_dataset(m: usize, n: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    let shift: Vec<f64> = (0..n)
        .map(|_| 2.0 * Distribution::<f64>::sample(&StandardNormal, &mut r))
        .collect();
    let scale: Vec<f64> = (0..n)
        .map(|_| 0.5 + Distribution::<f64>::sample(&StandardNormal, &mut r).abs())
        .collect();
    Array2::from_shape_fn((m, n), |(_, j)| {
        shift[j] + scale[j] * Distribution::<f64>::sample(&StandardNormal, &mut r)
    })
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

fn column(a: &Rows, j: usize) -> Vec<f64> {
    a.iter().map(|r| r[j]).collect()
}

fn mean_row(a: &Rows) -> Vec<f64> {
    let n = a[0].len();
    (0..n).map(|j| a.iter().map(|r| r[j]).sum::<f64>() / a.len() as f64).collect()
}

pub fn pairwise_euclidean(a: &Rows, b: &Rows) -> f64 {
    let mut s = 0.0;
    for x in a {
        for y in b {
            s += dist(x, y);
        }
    }
    s / (a.len() * b.len()) as f64
}

pub fn centroid_euclidean(a: &Rows, b: &Rows) -> f64 {
    dist(&mean_row(a), &mean_row(b))
}

pub fn cosine(a: &Rows, b: &Rows) -> f64 {
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut s = 0.0;
    for x in a {
        for y in b {
            let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
            s += 1.0 - dot / (norm(x) * norm(y));
        }
    }
    s / (a.len() * b.len()) as f64
}

/// Mean distance over all (centroid of A, centroid of B) pairs.
pub fn centroid_set_distance(ca: &Rows, cb: &Rows) -> f64 {
    pairwise_euclidean(ca, cb)
}

fn ecdf(s: &[f64], x: f64) -> f64 {
    s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64
}

/// W1 as the integral of |F_A - F_B| between consecutive pooled points.
pub fn wasserstein_1d(x: &[f64], y: &[f64]) -> f64 {
    let mut pts: Vec<f64> = x.iter().chain(y).copied().collect();
    pts.sort_by(f64::total_cmp);
    pts.windows(2)
        .map(|w| (ecdf(x, w[0]) - ecdf(y, w[0])).abs() * (w[1] - w[0]))
        .sum()
}

/// Equal-size W1 as the mean absolute difference of order statistics.
pub fn sorted_l1(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mut xs, mut ys) = (x.to_vec(), y.to_vec());
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    xs.iter().zip(&ys).map(|(a, b)| (a - b).abs()).sum::<f64>() / x.len() as f64
}

pub fn ks_1d(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .chain(y)
        .map(|&t| (ecdf(x, t) - ecdf(y, t)).abs())
        .fold(0.0, f64::max)
}

fn per_dim(a: &Rows, b: &Rows, f: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let n = a[0].len();
    (0..n).map(|j| f(&column(a, j), &column(b, j))).sum::<f64>() / n as f64
}

pub fn wasserstein(a: &Rows, b: &Rows) -> f64 {
    per_dim(a, b, wasserstein_1d)
}

pub fn ks(a: &Rows, b: &Rows) -> f64 {
    per_dim(a, b, ks_1d)
}

/// Normalised counts over `bins` equal-width bins spanning the pooled range;
/// the maximum lands in the last bin.
pub fn histograms(x: &[f64], y: &[f64], bins: usize) -> (Vec<f64>, Vec<f64>) {
    let lo = x.iter().chain(y).copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().chain(y).copied().fold(f64::NEG_INFINITY, f64::max);
    let count = |s: &[f64]| {
        let mut c = vec![0.0; bins];
        for &v in s {
            let mut b = 0;
            while b + 1 < bins && v >= lo + (hi - lo) * (b + 1) as f64 / bins as f64 {
                b += 1;
            }
            c[b] += 1.0 / s.len() as f64;
        }
        c
    };
    (count(x), count(y))
}

fn smoothed(p: &[f64], eps: f64) -> Vec<f64> {
    let total: f64 = p.iter().map(|v| v + eps).sum();
    p.iter().map(|v| (v + eps) / total).collect()
}

fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.log2()).sum::<f64>()
}

pub fn js(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    entropy_bits(&m) - (entropy_bits(p) + entropy_bits(q)) / 2.0
}

pub fn hellinger(p: &[f64], q: &[f64]) -> f64 {
    let bc: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
    (1.0 - bc).max(0.0).sqrt()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).max(0.0)).sum()
}

pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| a * (a / b).ln()).sum()
}

pub fn hist_metric(a: &Rows, b: &Rows, bins: usize, kind: &str) -> f64 {
    per_dim(a, b, |x, y| {
        let (p, q) = histograms(x, y, bins);
        match kind {
            "js" => js(&p, &q),
            "hellinger" => hellinger(&p, &q),
            "tv" => total_variation(&p, &q),
            "kl" => {
                let (p, q) = (smoothed(&p, 1e-10), smoothed(&q, 1e-10));
                (kl(&p, &q) + kl(&q, &p)) / 2.0
            }
            _ => unreachable!(),
        }
    })
}

fn kernel_mean(a: &Rows, b: &Rows, k: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let mut s = 0.0;
    for x in a {
        for y in b {
            s += k(x, y);
        }
    }
    s / (a.len() * b.len()) as f64
}

pub fn mmd_linear(a: &Rows, b: &Rows) -> f64 {
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    kernel_mean(a, a, dot) + kernel_mean(b, b, dot) - 2.0 * kernel_mean(a, b, dot)
}

/// Median of all distinct-pair distances in the pooled sample.
pub fn median_heuristic(a: &Rows, b: &Rows) -> f64 {
    let pooled: Rows = a.iter().chain(b).cloned().collect();
    let mut d = Vec::new();
    for i in 0..pooled.len() {
        for j in i + 1..pooled.len() {
            d.push(dist(&pooled[i], &pooled[j]));
        }
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    if n % 2 == 1 {
        d[n / 2]
    } else {
        (d[n / 2 - 1] + d[n / 2]) / 2.0
    }
}

pub fn mmd_rbf(a: &Rows, b: &Rows) -> f64 {
    let h = median_heuristic(a, b);
    let k = |x: &[f64], y: &[f64]| (-dist(x, y).powi(2) / (2.0 * h * h)).exp();
    (kernel_mean(a, a, k) + kernel_mean(b, b, k) - 2.0 * kernel_mean(a, b, k)).max(0.0)
}

pub fn energy(a: &Rows, b: &Rows) -> f64 {
    (2.0 * kernel_mean(a, b, dist) - kernel_mean(a, a, dist) - kernel_mean(b, b, dist)).max(0.0)
}

fn to_dmatrix(a: &Rows) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), a[0].len(), |i, j| a[i][j])
}

/// Top-`r` right singular vectors of the centred data, via nalgebra.
pub fn subspace_basis(a: &Rows, r: usize) -> DMatrix<f64> {
    let mu = mean_row(a);
    let centred: Rows = a.iter().map(|x| x.iter().zip(&mu).map(|(v, m)| v - m).collect()).collect();
    let svd = to_dmatrix(&centred).svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    DMatrix::from_fn(vt.ncols(), r, |i, k| vt[(order[k], i)])
}

/// Principal angles from the cosines, ascending.
pub fn principal_angles(ua: &DMatrix<f64>, ub: &DMatrix<f64>) -> Vec<f64> {
    let s = (ua.transpose() * ub).singular_values();
    let mut theta: Vec<f64> = s.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect();
    theta.sort_by(f64::total_cmp);
    theta
}

pub fn grassmann(theta: &[f64]) -> f64 {
    theta.iter().map(|t| t * t).sum::<f64>().sqrt()
}

pub fn chordal(theta: &[f64]) -> f64 {
    theta.iter().map(|t| t.sin().powi(2)).sum::<f64>().sqrt()
}

pub fn asimov(theta: &[f64]) -> f64 {
    theta.iter().copied().fold(0.0, f64::max)
}

/// Cross-validated domain-classifier error on a fixed design matrix (first
/// half label 0, second half label 1) and fold assignment.
pub fn pad_error(x: &Rows, folds: &[usize], n_folds: usize, epochs: usize, lr: f64) -> f64 {
    let n2 = x.len();
    let dim = x[0].len();
    let label = |i: usize| if i < n2 / 2 { 0.0 } else { 1.0 };
    let mut wrong = 0;
    for f in 0..n_folds {
        let train: Vec<usize> = (0..n2).filter(|&i| folds[i] != f).collect();
        let (mut w, mut bias) = (vec![0.0; dim], 0.0);
        for _ in 0..epochs {
            let mut gw = vec![0.0; dim];
            let mut gb = 0.0;
            for &i in &train {
                let z: f64 = bias + x[i].iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
                let e = 1.0 / (1.0 + (-z).exp()) - label(i);
                for (g, v) in gw.iter_mut().zip(&x[i]) {
                    *g += e * v;
                }
                gb += e;
            }
            for (wk, g) in w.iter_mut().zip(&gw) {
                *wk -= lr * g / train.len() as f64;
            }
            bias -= lr * gb / train.len() as f64;
        }
        for i in (0..n2).filter(|&i| folds[i] == f) {
            let z: f64 = bias + x[i].iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            if (z > 0.0) != (label(i) == 1.0) {
                wrong += 1;
            }
        }
    }
    wrong as f64 / n2 as f64
}

/// Brute-force k nearest neighbours (excluding self) by Euclidean distance.
pub fn knn(a: &Rows, k: usize) -> Vec<Vec<usize>> {
    (0..a.len())
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..a.len()).filter(|&j| j != i).map(|j| (dist(&a[i], &a[j]), j)).collect();
            d.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Mean fraction of each point's `k` neighbours in `hi` that are also among
/// its `k` neighbours in `lo`.
pub fn neighbourhood_preservation(hi: &Rows, lo: &Rows, k: usize) -> f64 {
    let (nh, nl) = (knn(hi, k), knn(lo, k));
    nh.iter()
        .zip(&nl)
        .map(|(a, b)| a.iter().filter(|j| b.contains(j)).count() as f64 / k as f64)
        .sum::<f64>()
        / hi.len() as f64
}

/// Least-squares `(a, b)` for `1 / (1 + a x^(2b))` against the UMAP target
/// curve, by exhaustive grid search with a local refinement.
pub fn curve_ab_grid(min_dist: f64, spread: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| if x <= min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() })
        .collect();
    let sse = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| (1.0 / (1.0 + a * x.powf(2.0 * b)) - y).powi(2))
            .sum()
    };
    let search = |a_range: (f64, f64), b_range: (f64, f64), step: f64| {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let mut a = a_range.0;
        while a <= a_range.1 {
            let mut b = b_range.0;
            while b <= b_range.1 {
                let c = sse(a, b);
                if c < best.0 {
                    best = (c, a, b);
                }
                b += step;
            }
            a += step;
        }
        (best.1, best.2)
    };
    let (a, b) = search((0.05, 5.0), (0.3, 2.0), 0.01);
    search((a - 0.02, a + 0.02), (b - 0.02, b + 0.02), 0.0005)
}

/// Geometric bisection for the kernel width solving
/// `sum exp(-(d - rho) / sigma) = log2(k)`.
pub fn smooth_knn(dists: &[f64], k: usize) -> (f64, f64) {
    let rho = dists.iter().copied().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
    let target = (k as f64).log2();
    let f = |s: f64| dists.iter().map(|&d| (-(d - rho).max(0.0) / s).exp()).sum::<f64>();
    let (mut lo, mut hi) = (1e-12_f64, 1e6_f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if f(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (rho, (lo * hi).sqrt())
}
