mod common;

use dsim_core::numerics::stats::{histogram_pair, histogram_pair_raw, pearson, EmpiricalQuantile};
use dsim_core::numerics::{kmeans, knn_search, truncated_svd, KnnMetric};
use nalgebra::DMatrix;
use ndarray::Array2;
use proptest::prelude::*;

fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

#[test]
fn singular_values_match_gram_eigenvalues() {
    for (m, n, seed) in [(50, 20, 1), (20, 50, 2), (30, 30, 3)] {
        let a = common::random_dataset(m, n, seed);
        let r = m.min(n);
        let svd = truncated_svd(a.view(), r).unwrap();
        let gram = if m >= n { to_na(&a).transpose() * to_na(&a) } else { to_na(&a) * to_na(&a).transpose() };
        let mut eig: Vec<f64> = gram.symmetric_eigenvalues().iter().map(|v| v.max(0.0).sqrt()).collect();
        eig.sort_by(|x, y| y.total_cmp(x));
        let top = eig[0];
        for (s, e) in svd.s.iter().zip(&eig) {
            assert!((s - e).abs() <= 1e-9 * top, "{s} vs {e}");
        }
        let err = (&svd.reconstruct() - &a).mapv(|v| v * v).sum().sqrt();
        let norm = a.mapv(|v| v * v).sum().sqrt();
        assert!(err <= 1e-8 * norm);
    }
}

#[test]
fn truncated_svd_spans_top_eigenvectors() {
    let a = common::random_dataset(80, 10, 4);
    let svd = truncated_svd(a.view(), 3).unwrap();
    let gram = to_na(&a).transpose() * to_na(&a);
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..10).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    for (k, &idx) in order.iter().take(3).enumerate() {
        let dot: f64 = (0..10).map(|i| svd.v[[i, k]] * eig.eigenvectors[(i, idx)]).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-9, "component {k}: |dot| = {}", dot.abs());
    }
}

#[test]
fn knn_matches_exhaustive_euclidean() {
    let x = common::random_dataset(100, 6, 8);
    let g = knn_search(x.view(), 5, KnnMetric::Euclidean).unwrap();
    let oracle = common::knn(&common::rows(x.view()), 5);
    for (i, want) in oracle.iter().enumerate() {
        assert_eq!(g.indices.row(i).to_vec(), *want, "row {i}");
    }
}

#[test]
fn pearson_matches_covariance_formula() {
    let x = common::random_dataset(40, 2, 12);
    let (a, b) = (x.column(0).to_vec(), x.column(1).to_vec());
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov = a.iter().zip(&b).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / (n - 1.0);
    let sa = (a.iter().map(|p| (p - ma).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let sb = (b.iter().map(|q| (q - mb).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((pearson(&a, &b).unwrap() - cov / (sa * sb)).abs() < 1e-12);
}

fn points() -> impl Strategy<Value = Array2<f64>> {
    (2usize..40, 1usize..5).prop_flat_map(|(m, n)| {
        prop::collection::vec(-50.0f64..50.0, m * n).prop_map(move |v| Array2::from_shape_vec((m, n), v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pearson_is_affine_invariant(
        x in prop::collection::vec(-100.0f64..100.0, 3..30),
        scale in 0.1f64..10.0,
        shift in -50.0f64..50.0,
    ) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v.sin() + i as f64).collect();
        let ys: Vec<f64> = y.iter().map(|v| scale * v + shift).collect();
        if let (Ok(r1), Ok(r2)) = (pearson(&x, &y), pearson(&x, &ys)) {
            prop_assert!((r1 - r2).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&r1));
        }
    }

    #[test]
    fn histograms_are_distributions(
        x in prop::collection::vec(-10.0f64..10.0, 1..60),
        y in prop::collection::vec(-10.0f64..10.0, 1..60),
        bins in 2usize..40,
    ) {
        for h in [histogram_pair(&x, &y, bins).unwrap(), histogram_pair_raw(&x, &y, bins).unwrap()] {
            prop_assert!((h.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((h.q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(h.p.iter().chain(&h.q).all(|&v| v >= 0.0));
            prop_assert_eq!(h.p.len(), h.q.len());
        }
    }

    #[test]
    fn quantile_inverts_ecdf(x in prop::collection::vec(-10.0f64..10.0, 1..50), t in 0.0f64..=1.0) {
        let q = EmpiricalQuantile::new(&x).unwrap();
        let v = q.eval(t);
        prop_assert!(x.contains(&v));
        prop_assert!(q.ecdf(v) >= t - 1e-12);
        // no smaller sample reaches t
        prop_assert!(x.iter().filter(|&&s| s < v).all(|&s| q.ecdf(s) < t));
    }

    #[test]
    fn kmeans_inertia_is_consistent(p in points(), k in 1usize..5, seed in 0u64..1000) {
        prop_assume!(k <= p.nrows());
        let res = kmeans(p.view(), k, seed).unwrap();
        prop_assert!(res.labels.iter().all(|&l| l < k));
        let direct: f64 = p
            .outer_iter()
            .zip(&res.labels)
            .map(|(x, &l)| (&x - &res.centroids.row(l)).mapv(|v| v * v).sum())
            .sum();
        prop_assert!((direct - res.inertia).abs() <= 1e-9 * (1.0 + direct));
        prop_assert!(res.inertia_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12));
        // every point sits with its nearest centroid
        for (x, &l) in p.outer_iter().zip(&res.labels) {
            let d = |c: usize| (&x - &res.centroids.row(c)).mapv(|v| v * v).sum();
            prop_assert!((0..k).all(|c| d(l) <= d(c) + 1e-9));
        }
    }
}
