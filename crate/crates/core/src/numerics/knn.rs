//! Exact brute-force k-nearest-neighbour search.
//!
//! Candidate distances are evaluated block-wise through a Gram product, the
//! selected neighbours are then re-measured directly so reported distances do
//! not carry the cancellation error of the `|x|^2 + |y|^2 - 2xy` expansion.

use std::cmp::Ordering;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BLOCK_ROWS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnMetric {
    Euclidean,
    /// `1 - pearson(x, y)`; constant rows sit at distance 1 from everything.
    Correlation,
}

impl std::str::FromStr for KnnMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(KnnMetric::Euclidean),
            "correlation" => Ok(KnnMetric::Correlation),
            other => Err(Error::param(
                "metric",
                format!("unknown kNN metric `{other}` (expected euclidean|correlation)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnGraph {
    /// M x k neighbour indices, ascending by distance.
    pub indices: Array2<usize>,
    /// M x k distances matching `indices`.
    pub distances: Array2<f64>,
    pub metric: KnnMetric,
    /// Rows that were constant under the correlation metric.
    pub degenerate_rows: Vec<usize>,
}

impl KnnGraph {
    pub fn k(&self) -> usize {
        self.indices.ncols()
    }
}

/// Rows prepared for a metric: raw rows for Euclidean, centred unit rows
/// (or `None` when constant) for correlation.
struct Prepared {
    rows: Array2<f64>,
    sq_norms: Array1<f64>,
    degenerate: Vec<bool>,
}

fn prepare(points: ArrayView2<f64>, metric: KnnMetric) -> Prepared {
    match metric {
        KnnMetric::Euclidean => {
            let rows = points.to_owned();
            let sq_norms = rows.map_axis(Axis(1), |r| r.dot(&r));
            let degenerate = vec![false; rows.nrows()];
            Prepared {
                rows,
                sq_norms,
                degenerate,
            }
        }
        KnnMetric::Correlation => {
            let mut rows = points.to_owned();
            let mut degenerate = vec![false; rows.nrows()];
            for (i, mut r) in rows.rows_mut().into_iter().enumerate() {
                let mean = r.mean().unwrap_or(0.0);
                r.mapv_inplace(|x| x - mean);
                let norm = r.dot(&r).sqrt();
                if norm > 0.0 && r.iter().any(|&x| x != 0.0) {
                    r.mapv_inplace(|x| x / norm);
                } else {
                    r.fill(0.0);
                    degenerate[i] = true;
                }
            }
            let sq_norms = Array1::ones(rows.nrows());
            Prepared {
                rows,
                sq_norms,
                degenerate,
            }
        }
    }
}

/// Direct (non-Gram) distance between two rows under `metric`.
pub fn pair_distance(a: ArrayView1<f64>, b: ArrayView1<f64>, metric: KnnMetric) -> f64 {
    match metric {
        KnnMetric::Euclidean => a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
        KnnMetric::Correlation => {
            let ma = a.mean().unwrap_or(0.0);
            let mb = b.mean().unwrap_or(0.0);
            let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
            for (x, y) in a.iter().zip(b.iter()) {
                let (dx, dy) = (x - ma, y - mb);
                sab += dx * dy;
                saa += dx * dx;
                sbb += dy * dy;
            }
            if saa == 0.0 || sbb == 0.0 {
                1.0
            } else {
                (1.0 - sab / (saa * sbb).sqrt()).clamp(0.0, 2.0)
            }
        }
    }
}

fn prepared_distance(p: &Prepared, i: usize, j: usize, metric: KnnMetric) -> f64 {
    match metric {
        KnnMetric::Euclidean => pair_distance(p.rows.row(i), p.rows.row(j), metric),
        KnnMetric::Correlation => {
            if p.degenerate[i] || p.degenerate[j] {
                1.0
            } else {
                (1.0 - p.rows.row(i).dot(&p.rows.row(j))).clamp(0.0, 2.0)
            }
        }
    }
}

fn by_dist(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

pub fn knn_search(points: ArrayView2<f64>, k: usize, metric: KnnMetric) -> Result<KnnGraph> {
    let m = points.nrows();
    if k == 0 || k >= m {
        return Err(Error::param("k", format!("need 1 <= k < M = {m}, got {k}")));
    }
    let prep = prepare(points, metric);
    let starts: Vec<usize> = (0..m).step_by(BLOCK_ROWS).collect();

    let blocks: Vec<Vec<Vec<(f64, usize)>>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + BLOCK_ROWS).min(m);
            let block = prep.rows.slice(s![start..end, ..]);
            let gram = block.dot(&prep.rows.t());
            (start..end)
                .map(|i| {
                    let g = gram.row(i - start);
                    let mut cand: Vec<(f64, usize)> = (0..m)
                        .filter(|&j| j != i)
                        .map(|j| {
                            let d = match metric {
                                KnnMetric::Euclidean => {
                                    (prep.sq_norms[i] + prep.sq_norms[j] - 2.0 * g[j]).max(0.0)
                                }
                                KnnMetric::Correlation => {
                                    if prep.degenerate[i] || prep.degenerate[j] {
                                        1.0
                                    } else {
                                        1.0 - g[j]
                                    }
                                }
                            };
                            (d, j)
                        })
                        .collect();
                    // keep a margin past k so near-ties resolve on exact distances
                    let keep = (k + 8).min(cand.len());
                    if keep < cand.len() {
                        cand.select_nth_unstable_by(keep - 1, by_dist);
                        cand.truncate(keep);
                    }
                    let mut exact: Vec<(f64, usize)> = cand
                        .into_iter()
                        .map(|(_, j)| (prepared_distance(&prep, i, j, metric), j))
                        .collect();
                    exact.sort_by(by_dist);
                    exact.truncate(k);
                    exact
                })
                .collect()
        })
        .collect();

    let mut indices = Array2::<usize>::zeros((m, k));
    let mut distances = Array2::<f64>::zeros((m, k));
    for (i, row) in blocks.into_iter().flatten().enumerate() {
        for (c, (d, j)) in row.into_iter().enumerate() {
            indices[[i, c]] = j;
            distances[[i, c]] = d;
        }
    }
    let degenerate_rows = prep
        .degenerate
        .iter()
        .enumerate()
        .filter_map(|(i, &d)| d.then_some(i))
        .collect();
    Ok(KnnGraph {
        indices,
        distances,
        metric,
        degenerate_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng as _;

    #[test]
    fn colinear_points() {
        let pts = array![[0.0], [1.0], [3.0]];
        let g = knn_search(pts.view(), 1, KnnMetric::Euclidean).unwrap();
        assert_eq!(g.indices.column(0).to_vec(), vec![1, 0, 1]);
        assert_eq!(g.distances.column(0).to_vec(), vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn affine_rows_have_zero_correlation_distance() {
        let x = array![1.0, 4.0, 2.0, 8.0];
        let y = x.mapv(|v| 2.0 * v + 1.0);
        assert!(pair_distance(x.view(), y.view(), KnnMetric::Correlation) < 1e-12);
        let pts = ndarray::stack![Axis(0), x, y, array![3.0, 1.0, 0.0, 2.0]];
        let g = knn_search(pts.view(), 1, KnnMetric::Correlation).unwrap();
        assert_eq!(g.indices[[0, 0]], 1);
        assert!(g.distances[[0, 0]] < 1e-12);
    }

    #[test]
    fn constant_row_flagged() {
        let pts = array![[1.0, 1.0, 1.0], [1.0, 2.0, 3.0], [3.0, 2.0, 1.0]];
        let g = knn_search(pts.view(), 2, KnnMetric::Correlation).unwrap();
        assert_eq!(g.degenerate_rows, vec![0]);
        assert_eq!(g.distances.row(0).to_vec(), vec![1.0, 1.0]);
    }

    #[test]
    fn matches_exhaustive_sort() {
        let mut rng = crate::numerics::rng::rng(42);
        let pts = Array2::from_shape_fn((100, 6), |_| rng.random_range(-1.0..1.0));
        for metric in [KnnMetric::Euclidean, KnnMetric::Correlation] {
            let g = knn_search(pts.view(), 5, metric).unwrap();
            for i in 0..100 {
                let mut all: Vec<(f64, usize)> = (0..100)
                    .filter(|&j| j != i)
                    .map(|j| (pair_distance(pts.row(i), pts.row(j), metric), j))
                    .collect();
                all.sort_by(by_dist);
                let want: Vec<usize> = all[..5].iter().map(|p| p.1).collect();
                assert_eq!(g.indices.row(i).to_vec(), want);
                for c in 0..5 {
                    assert!((g.distances[[i, c]] - all[c].0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn k_must_be_below_m() {
        let pts = array![[0.0], [1.0]];
        assert!(knn_search(pts.view(), 2, KnnMetric::Euclidean).is_err());
    }
}
