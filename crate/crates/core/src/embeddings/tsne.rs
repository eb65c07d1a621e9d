//! Exact O(M^2) t-SNE.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{restore_order, Corpus, EmbeddingKind, EmbeddingModel};
use crate::error::{Error, Result};
use crate::numerics::rng::{derive_seed, rng};

pub const TSNE_MAX_POINTS: usize = 5000;

const N_ITER: usize = 1000;
const EXAGGERATION_ITERS: usize = 250;
const EXAGGERATION: f64 = 12.0;
const MOMENTUM_EARLY: f64 = 0.5;
const MOMENTUM_LATE: f64 = 0.8;
const MIN_LEARNING_RATE: f64 = 50.0;
const MIN_GAIN: f64 = 0.01;
const P_FLOOR: f64 = 1e-12;
const INIT_STDEV: f64 = 1e-4;
const PERPLEXITY_TOL: f64 = 1e-5;
const PERPLEXITY_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneParams {
    pub perplexity: f64,
    pub out_dim: usize,
    pub n_iter: usize,
    /// Step size; `None` picks `max(M / (4 * exaggeration), 50)`.
    #[serde(default)]
    pub learning_rate: Option<f64>,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            out_dim: 2,
            n_iter: N_ITER,
            learning_rate: None,
            seed: 0,
        }
    }
}

fn sq_dists(x: ArrayView2<f64>) -> Array2<f64> {
    let m = x.nrows();
    let mut d = Array2::zeros((m, m));
    d.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(i, mut row)| {
        let xi = x.row(i);
        for j in 0..m {
            row[j] = xi.iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    });
    d
}

/// Conditional affinities `p_{j|i}` with per-point precision found by
/// bisection so that the row entropy (nats) equals `ln(perplexity)`.
fn conditional_p(d2: &Array2<f64>, perplexity: f64) -> Array2<f64> {
    let m = d2.nrows();
    let target = perplexity.ln();
    let mut p = Array2::zeros((m, m));
    p.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(i, mut row)| {
        let di = d2.row(i);
        let (mut beta, mut lo, mut hi) = (1.0f64, 0.0f64, f64::INFINITY);
        for _ in 0..PERPLEXITY_STEPS {
            // shift by the smallest distance so the largest weight is 1
            let dmin = (0..m).filter(|&j| j != i).map(|j| di[j]).fold(f64::INFINITY, f64::min);
            let mut sum = 0.0;
            let mut dot = 0.0;
            for j in 0..m {
                if j == i {
                    row[j] = 0.0;
                    continue;
                }
                let w = (-(di[j] - dmin) * beta).exp();
                row[j] = w;
                sum += w;
                dot += w * (di[j] - dmin);
            }
            let h = sum.ln() + beta * dot / sum;
            row.mapv_inplace(|w| w / sum);
            let diff = h - target;
            if diff.abs() < PERPLEXITY_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
    });
    p
}

/// Symmetric joint affinities `(P + P^T) / 2M`, floored.
fn joint_p(points: ArrayView2<f64>, perplexity: f64) -> Array2<f64> {
    let m = points.nrows() as f64;
    let cond = conditional_p(&sq_dists(points), perplexity);
    let mut p = &cond + &cond.t();
    p.mapv_inplace(|v| (v / (2.0 * m)).max(P_FLOOR));
    p.diag_mut().fill(0.0);
    p
}

/// One objective/gradient evaluation. Returns KL(P || Q) for the
/// unexaggerated `p`.
fn gradient(p: &Array2<f64>, y: &Array2<f64>, exaggeration: f64, grad: &mut Array2<f64>) -> f64 {
    let m = y.nrows();
    let num = {
        let mut num = sq_dists(y.view());
        num.mapv_inplace(|d| 1.0 / (1.0 + d));
        num.diag_mut().fill(0.0);
        num
    };
    let row_sums: Vec<f64> = num.axis_iter(Axis(0)).into_par_iter().map(|r| r.sum()).collect();
    let z: f64 = row_sums.iter().sum();
    let kl_rows: Vec<f64> = grad
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .map(|(i, mut g)| {
            g.fill(0.0);
            let mut kl = 0.0;
            for j in 0..m {
                if j == i {
                    continue;
                }
                let q = (num[[i, j]] / z).max(P_FLOOR);
                let pij = p[[i, j]];
                kl += pij * (pij / q).ln();
                let coeff = 4.0 * (exaggeration * pij - q) * num[[i, j]];
                for (d, gd) in g.iter_mut().enumerate() {
                    *gd += coeff * (y[[i, d]] - y[[j, d]]);
                }
            }
            kl
        })
        .collect();
    kl_rows.iter().sum()
}

/// Exact t-SNE on the joint corpus.
pub fn embed_tsne(corpus: &Corpus, params: &TsneParams) -> Result<EmbeddingModel> {
    let m = corpus.n_points();
    if m > TSNE_MAX_POINTS {
        return Err(Error::param(
            "corpus",
            format!("exact t-SNE supports at most {TSNE_MAX_POINTS} points, got {m}; lower max_points"),
        ));
    }
    if !(params.perplexity > 0.0) || 3.0 * params.perplexity >= m as f64 {
        return Err(Error::param(
            "perplexity",
            format!("need 0 < 3 * perplexity < M = {m}, got perplexity {}", params.perplexity),
        ));
    }
    if params.out_dim == 0 {
        return Err(Error::param("out_dim", "must be >= 1"));
    }
    let lr = match params.learning_rate {
        Some(lr) if lr > 0.0 && lr.is_finite() => lr,
        Some(lr) => return Err(Error::param("learning_rate", format!("must be positive and finite, got {lr}"))),
        None => (m as f64 / (4.0 * EXAGGERATION)).max(MIN_LEARNING_RATE),
    };
    let order = corpus.canonical_order();
    let canon = corpus.points.select(Axis(0), &order);
    let p = joint_p(canon.view(), params.perplexity);

    let mut r = rng(derive_seed(params.seed, &[0x75E]));
    let normal = Normal::new(0.0, INIT_STDEV).expect("positive stdev");
    let mut y = Array2::from_shape_fn((m, params.out_dim), |_| normal.sample(&mut r));
    let mut update = Array2::<f64>::zeros(y.dim());
    let mut gains = Array2::<f64>::ones(y.dim());
    let mut grad = Array2::<f64>::zeros(y.dim());
    let mut trace = Vec::with_capacity(params.n_iter);

    for it in 0..params.n_iter {
        let early = it < EXAGGERATION_ITERS;
        let exaggeration = if early { EXAGGERATION } else { 1.0 };
        let momentum = if early { MOMENTUM_EARLY } else { MOMENTUM_LATE };
        trace.push(gradient(&p, &y, exaggeration, &mut grad));
        Zip::from(&mut gains).and(&grad).and(&update).for_each(|g, &dy, &u| {
            *g = if (dy > 0.0) != (u > 0.0) { *g + 0.2 } else { *g * 0.8 };
            *g = g.max(MIN_GAIN);
        });
        Zip::from(&mut update).and(&gains).and(&grad).for_each(|u, &g, &dy| {
            *u = momentum * *u - lr * g * dy;
        });
        y += &update;
        let mean = y.mean_axis(Axis(0)).expect("non-empty");
        y -= &mean;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged(format!("t-SNE produced non-finite coordinates at iteration {it}")));
        }
    }

    Ok(EmbeddingModel {
        kind: EmbeddingKind::Tsne,
        coords: restore_order(&y, &order),
        ranges: corpus.ranges.clone(),
        pca: None,
        umap: None,
        kl_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn blobs(per: usize, n: usize, gap: f64, seed: u64) -> Array2<f64> {
        let mut r = rng(seed);
        Array2::from_shape_fn((2 * per, n), |(i, j)| {
            let z: f64 = StandardNormal.sample(&mut r);
            z + if i >= per && j == 0 { gap } else { 0.0 }
        })
    }

    #[test]
    fn perplexity_is_matched() {
        let x = blobs(40, 3, 0.0, 3);
        let cond = conditional_p(&sq_dists(x.view()), 10.0);
        for row in cond.rows() {
            let h: f64 = row.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
            assert!((h.exp() - 10.0).abs() < 1e-3, "perplexity {}", h.exp());
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_p_is_symmetric_and_normalised() {
        let p = joint_p(blobs(20, 2, 5.0, 1).view(), 5.0);
        assert!((p.sum() - 1.0).abs() < 1e-6);
        assert_eq!(p, p.t());
    }

    #[test]
    fn deterministic_and_separates_blobs() {
        let corpus = Corpus::from_matrix(blobs(40, 5, 20.0, 2));
        let params = TsneParams {
            perplexity: 10.0,
            n_iter: 400,
            ..Default::default()
        };
        let a = embed_tsne(&corpus, &params).unwrap();
        let b = embed_tsne(&corpus, &params).unwrap();
        assert_eq!(a.coords, b.coords);
        let km = crate::numerics::kmeans(a.coords.view(), 2, 0).unwrap();
        let agree = (0..80).filter(|&i| km.labels[i] == km.labels[0] && i < 40 || km.labels[i] != km.labels[0] && i >= 40).count();
        assert!(agree >= 76, "agree {agree} trace {:?} {:?}", &a.kl_trace[..3], &a.kl_trace[a.kl_trace.len() - 3..]);
    }

    #[test]
    fn guards() {
        let corpus = Corpus::from_matrix(blobs(5, 2, 0.0, 1));
        assert!(embed_tsne(&corpus, &TsneParams::default()).is_err());
        let big = Corpus::from_matrix(Array2::zeros((TSNE_MAX_POINTS + 1, 1)));
        assert!(embed_tsne(&big, &TsneParams::default()).is_err());
    }
}
