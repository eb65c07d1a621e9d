//! UMAP: fuzzy simplicial set construction and cross-entropy layout
//! optimization by negative-sampling SGD.

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{restore_order, Corpus, EmbeddingKind, EmbeddingModel, UmapState};
use crate::error::{Error, Result};
use crate::numerics::rng::{derive_seed, rng};
use crate::numerics::{knn_search, KnnGraph, KnnMetric};

const SIGMA_LO: f64 = 1e-8;
const SIGMA_HI: f64 = 1e4;
const SIGMA_ITERS: usize = 64;
const CURVE_POINTS: usize = 300;
const GRAD_CLIP: f64 = 4.0;
const REPULSION_EPS: f64 = 1e-3;
const INIT_STDEV: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmapParams {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub out_dim: usize,
    pub n_epochs: usize,
    pub learning_rate: f64,
    pub negative_samples: usize,
    pub metric: KnnMetric,
    pub seed: u64,
}

impl Default for UmapParams {
    fn default() -> Self {
        Self {
            n_neighbors: 15,
            min_dist: 0.1,
            spread: 1.0,
            out_dim: 2,
            n_epochs: 300,
            learning_rate: 1.0,
            negative_samples: 5,
            metric: KnnMetric::Correlation,
            seed: 0,
        }
    }
}

impl UmapParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_neighbors < 2 {
            return Err(Error::param("n_neighbors", "must be >= 2"));
        }
        if !(self.spread > 0.0) {
            return Err(Error::param("spread", "must be > 0"));
        }
        if !(self.min_dist >= 0.0 && self.min_dist < 3.0 * self.spread) {
            return Err(Error::param("min_dist", "need 0 <= min_dist < 3 * spread"));
        }
        if self.out_dim == 0 {
            return Err(Error::param("out_dim", "must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Symmetric fuzzy membership graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGraph {
    pub n_points: usize,
    /// Undirected edges `(i, j, w)` with `i < j`, sorted, `w` in (0, 1].
    pub edges: Vec<(usize, usize, f64)>,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl FuzzyGraph {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        match self.edges.binary_search_by(|e| (e.0, e.1).cmp(&key)) {
            Ok(pos) => self.edges[pos].2,
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut w = Array2::zeros((self.n_points, self.n_points));
        for &(i, j, v) in &self.edges {
            w[[i, j]] = v;
            w[[j, i]] = v;
        }
        w
    }
}

/// Returns `(rho, sigma)`: `rho` is the nearest-neighbour distance and
/// `sigma` solves `sum_i exp(-max(0, d_i - rho) / sigma) = log2(k)` by
/// bisection on `[1e-8, 1e4]`.
pub fn smooth_knn_calibrate(knn_dists: &[f64], k: usize) -> (f64, f64) {
    let rho = knn_dists.first().copied().unwrap_or(0.0);
    let target = (k.max(1) as f64).log2();
    let total = |sigma: f64| -> f64 {
        knn_dists
            .iter()
            .map(|&d| (-(d - rho).max(0.0) / sigma).exp())
            .sum()
    };
    let (mut lo, mut hi) = (SIGMA_LO, SIGMA_HI);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..SIGMA_ITERS {
        mid = 0.5 * (lo + hi);
        if total(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if total(SIGMA_LO) >= target {
        return (rho, SIGMA_LO);
    }
    (rho, mid)
}

/// Directed membership strengths `w(i -> j) = exp(-max(0, d_ij - rho_i) / sigma_i)`.
pub fn membership_strengths(knn: &KnnGraph, rho: &[f64], sigma: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(knn.indices.len());
    for (i, (idx, dist)) in knn.indices.rows().into_iter().zip(knn.distances.rows()).enumerate() {
        for (&j, &d) in idx.iter().zip(dist.iter()) {
            out.push((i, j, (-(d - rho[i]).max(0.0) / sigma[i]).exp()));
        }
    }
    out
}

/// Fuzzy union `W = A + A^T - A o A^T` of a directed edge list.
pub fn fuzzy_union(mut directed: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    directed.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    directed.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    let lookup = |i: usize, j: usize| -> f64 {
        directed
            .binary_search_by(|e| (e.0, e.1).cmp(&(i, j)))
            .map(|p| directed[p].2)
            .unwrap_or(0.0)
    };
    let mut out = Vec::with_capacity(directed.len());
    for &(i, j, w) in &directed {
        if i == j {
            continue;
        }
        let back = lookup(j, i);
        // each unordered pair is emitted once, from its smaller endpoint or
        // from the only direction present
        if i < j || back == 0.0 {
            let v = w + back * (1.0 - w);
            if v > 0.0 {
                out.push((i.min(j), i.max(j), v));
            }
        }
    }
    out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    out
}

pub fn build_fuzzy_graph(points: ArrayView2<f64>, params: &UmapParams) -> Result<FuzzyGraph> {
    params.validate()?;
    let m = points.nrows();
    if m <= params.n_neighbors {
        return Err(Error::param(
            "n_neighbors",
            format!("corpus has {m} rows; need more than n_neighbors = {}", params.n_neighbors),
        ));
    }
    let knn = knn_search(points, params.n_neighbors, params.metric)?;
    let (rho, sigma): (Vec<f64>, Vec<f64>) = knn
        .distances
        .rows()
        .into_iter()
        .map(|d| smooth_knn_calibrate(&d.to_vec(), params.n_neighbors))
        .unzip();
    let directed = membership_strengths(&knn, &rho, &sigma);
    Ok(FuzzyGraph {
        n_points: m,
        edges: fuzzy_union(directed),
        rho,
        sigma,
    })
}

/// Least-squares fit of `1 / (1 + a d^(2b))` to the target curve
/// (`1` for `d <= min_dist`, `exp(-(d - min_dist) / spread)` beyond) on 300
/// evenly spaced points in `[0, 3 spread]`, by Levenberg-Marquardt.
pub fn fit_curve_ab(min_dist: f64, spread: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..CURVE_POINTS)
        .map(|i| 3.0 * spread * i as f64 / (CURVE_POINTS - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| if x <= min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() })
        .collect();
    let sse = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let r = 1.0 / (1.0 + a * x.powf(2.0 * b)) - y;
                r * r
            })
            .sum()
    };
    let (mut a, mut b) = (1.0, 1.0);
    let mut cost = sse(a, b);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        // normal equations J^T J and J^T r
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x <= 0.0 {
                continue;
            }
            let p = x.powf(2.0 * b);
            let den = 1.0 + a * p;
            let f = 1.0 / den;
            let r = f - y;
            let da = -p / (den * den);
            let db = -a * p * 2.0 * x.ln() / (den * den);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let (m00, m11) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m00 * m11 - jab * jab;
            if det == 0.0 {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(m11 * ga - jab * gb) / det;
            let step_b = -(m00 * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            if na > 0.0 && nb > 0.0 {
                let c = sse(na, nb);
                if c < cost {
                    let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                    a = na;
                    b = nb;
                    cost = c;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = rel > 1e-15;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

fn clip(v: f64) -> f64 {
    v.clamp(-GRAD_CLIP, GRAD_CLIP)
}

/// Negative-sampling SGD on the UMAP cross-entropy.
///
/// Edges are visited in a fixed order; an edge of weight `w` fires every
/// `max_w / w` epochs and draws `negative_samples` repulsive partners per
/// firing. The learning rate decays linearly to zero.
pub fn optimize_layout(graph: &FuzzyGraph, init: ArrayView2<f64>, params: &UmapParams) -> Result<Array2<f64>> {
    params.validate()?;
    if init.nrows() != graph.n_points {
        return Err(Error::DimensionMismatch {
            expected: graph.n_points,
            got: init.nrows(),
        });
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("init", "initial coordinates must be finite"));
    }
    let mut emb = init.to_owned();
    if params.n_epochs == 0 || graph.edges.is_empty() {
        return Ok(emb);
    }
    let (a, b) = fit_curve_ab(params.min_dist, params.spread);
    let n_epochs = params.n_epochs as f64;
    let dim = emb.ncols();
    let n = graph.n_points;

    let max_w = graph.edges.iter().map(|e| e.2).fold(0.0, f64::max);
    let mut heads = Vec::new();
    let mut tails = Vec::new();
    let mut eps = Vec::new();
    for &(i, j, w) in &graph.edges {
        if w < max_w / n_epochs {
            continue;
        }
        let per = max_w / w;
        heads.extend([i, j]);
        tails.extend([j, i]);
        eps.extend([per, per]);
    }
    // keep the edge stream sorted by (head, tail)
    let mut order: Vec<usize> = (0..heads.len()).collect();
    order.sort_by_key(|&e| (heads[e], tails[e]));
    let heads: Vec<usize> = order.iter().map(|&e| heads[e]).collect();
    let tails: Vec<usize> = order.iter().map(|&e| tails[e]).collect();
    let eps: Vec<f64> = order.iter().map(|&e| eps[e]).collect();

    let neg_rate = params.negative_samples as f64;
    let eps_neg: Vec<f64> = eps.iter().map(|&e| e / neg_rate.max(1.0)).collect();
    let mut next_sample = eps.clone();
    let mut next_neg = eps_neg.clone();
    let mut rng = rng(derive_seed(params.seed, &[0x1A70]));
    let mut current = vec![0.0; dim];
    let mut other = vec![0.0; dim];

    for epoch in 0..params.n_epochs {
        let ep = epoch as f64;
        let alpha = params.learning_rate * (1.0 - ep / n_epochs);
        for e in 0..heads.len() {
            if next_sample[e] > ep {
                continue;
            }
            let (j, k) = (heads[e], tails[e]);
            current.iter_mut().zip(emb.row(j)).for_each(|(c, v)| *c = *v);
            other.iter_mut().zip(emb.row(k)).for_each(|(c, v)| *c = *v);
            let d2: f64 = current.iter().zip(&other).map(|(x, y)| (x - y) * (x - y)).sum();
            let coeff = if d2 > 0.0 {
                -2.0 * a * b * d2.powf(b - 1.0) / (a * d2.powf(b) + 1.0)
            } else {
                0.0
            };
            for d in 0..dim {
                let g = clip(coeff * (current[d] - other[d]));
                current[d] += g * alpha;
                other[d] -= g * alpha;
            }
            emb.row_mut(k).iter_mut().zip(&other).for_each(|(v, c)| *v = *c);
            next_sample[e] += eps[e];

            if params.negative_samples > 0 {
                let n_neg = ((ep - next_neg[e]) / eps_neg[e]).floor().max(0.0) as usize;
                for _ in 0..n_neg {
                    let q = rng.random_range(0..n);
                    let d2: f64 = current
                        .iter()
                        .zip(emb.row(q))
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum();
                    let coeff = if d2 > 0.0 {
                        2.0 * b / ((REPULSION_EPS + d2) * (a * d2.powf(b) + 1.0))
                    } else if q == j {
                        continue;
                    } else {
                        0.0
                    };
                    for d in 0..dim {
                        let g = if coeff > 0.0 {
                            clip(coeff * (current[d] - emb[[q, d]]))
                        } else {
                            GRAD_CLIP
                        };
                        current[d] += g * alpha;
                    }
                }
                next_neg[e] += n_neg as f64 * eps_neg[e];
            }
            emb.row_mut(j).iter_mut().zip(&current).for_each(|(v, c)| *v = *c);
        }
        if emb.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged(format!(
                "non-finite coordinates at epoch {epoch}; lower learning_rate (currently {})",
                params.learning_rate
            )));
        }
    }
    Ok(emb)
}

pub(crate) fn gaussian_init(n: usize, dim: usize, stdev: f64, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, stdev).expect("positive stdev");
    Array2::from_shape_fn((n, dim), |_| normal.sample(&mut r))
}

/// Full pipeline: fuzzy graph, seeded Gaussian initialisation, curve fit
/// and layout optimization over the joint corpus.
pub fn fit_umap(corpus: &Corpus, params: &UmapParams) -> Result<EmbeddingModel> {
    params.validate()?;
    let order = corpus.canonical_order();
    let canon = corpus.points.select(Axis(0), &order);
    let graph = build_fuzzy_graph(canon.view(), params)?;
    let init = gaussian_init(canon.nrows(), params.out_dim, INIT_STDEV, derive_seed(params.seed, &[0x1417]));
    let (a, b) = fit_curve_ab(params.min_dist, params.spread);
    let layout = optimize_layout(&graph, init.view(), params)?;
    Ok(EmbeddingModel {
        kind: EmbeddingKind::Umap,
        coords: restore_order(&layout, &order),
        ranges: corpus.ranges.clone(),
        pca: None,
        umap: Some(UmapState {
            params: params.clone(),
            a,
            b,
            graph: Some(graph),
        }),
        kl_trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand_distr::StandardNormal;

    #[test]
    fn calibrate_plateau_clamps_low() {
        let (rho, sigma) = smooth_knn_calibrate(&[2.0, 2.0, 2.0, 2.0], 4);
        assert_eq!(rho, 2.0);
        assert_eq!(sigma, SIGMA_LO);
    }

    #[test]
    fn calibrate_monotone_in_target() {
        let d = [0.5, 0.9, 1.3, 1.4, 2.0, 2.2, 3.0, 3.5];
        let (_, s4) = smooth_knn_calibrate(&d[..4], 4);
        // same four distances padded with far-away points keep the sum
        // almost unchanged, so the larger target needs a wider kernel
        let mut padded = d[..4].to_vec();
        padded.extend([1e3; 4]);
        let (_, s8) = smooth_knn_calibrate(&padded, 8);
        assert!(s8 > s4);
    }

    #[test]
    fn union_algebra() {
        let u = fuzzy_union(vec![(0, 1, 1.0), (2, 1, 0.5), (1, 2, 0.5)]);
        assert_eq!(u, vec![(0, 1, 1.0), (1, 2, 0.75)]);
    }

    #[test]
    fn graph_symmetric_bounded_nearest_is_one() {
        let mut r = crate::numerics::rng::rng(5);
        let pts = Array2::from_shape_fn((50, 4), |_| r.sample::<f64, _>(StandardNormal));
        let params = UmapParams {
            n_neighbors: 5,
            metric: KnnMetric::Euclidean,
            ..Default::default()
        };
        let g = build_fuzzy_graph(pts.view(), &params).unwrap();
        let w = g.to_dense();
        for i in 0..50 {
            assert_eq!(w[[i, i]], 0.0);
            for j in 0..50 {
                assert!((w[[i, j]] - w[[j, i]]).abs() <= 1e-12);
                assert!((0.0..=1.0).contains(&w[[i, j]]));
            }
        }
        let knn = knn_search(pts.view(), 5, KnnMetric::Euclidean).unwrap();
        let directed = membership_strengths(&knn, &g.rho, &g.sigma);
        for i in 0..50 {
            let nearest = directed.iter().find(|e| e.0 == i).unwrap();
            assert_eq!(nearest.2, 1.0);
            assert_eq!(w[[i, nearest.1]], 1.0);
        }
    }

    #[test]
    fn zero_epochs_is_identity() {
        let g = FuzzyGraph {
            n_points: 3,
            edges: vec![(0, 1, 1.0), (1, 2, 0.5)],
            rho: vec![0.0; 3],
            sigma: vec![1.0; 3],
        };
        let init = ndarray::array![[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]];
        let p = UmapParams {
            n_epochs: 0,
            ..Default::default()
        };
        assert_eq!(optimize_layout(&g, init.view(), &p).unwrap(), init);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(UmapParams { n_neighbors: 1, ..Default::default() }.validate().is_err());
        assert!(UmapParams { min_dist: 3.5, ..Default::default() }.validate().is_err());
        assert!(UmapParams { out_dim: 0, ..Default::default() }.validate().is_err());
    }
}
