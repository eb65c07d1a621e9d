mod common;

use dsim_core::data_io::{generate_drift_family, generate_drift_family_with, DriftFamilyConfig};
use dsim_core::evaluation::{
    correlate, evaluate_performance_matrix, fit_compressor, nmse_db, performance_drop, run_benchmark, BenchmarkSpec,
};
use dsim_core::numerics::stats::pearson;
use dsim_core::{distance_matrix, Dataset, DistanceMatrix, DropMode, Error, MetricId, MetricSpec, Space, TaskSpec};
use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};

#[test]
fn reconstruction_error_is_the_discarded_spectrum() {
    let lambda: [f64; 8] = [9.0, 4.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.05];
    let mut r = dsim_core::numerics::rng::rng(1);
    let x = Array2::from_shape_fn((20_000, 8), |(_, j)| {
        lambda[j].sqrt() * Distribution::<f64>::sample(&StandardNormal, &mut r)
    });
    let ds = Dataset::new("g", x.clone(), "t").unwrap();
    for latent in [1, 3, 5] {
        let model = fit_compressor(&ds, latent).unwrap();
        let err = &x - &model.reconstruct(x.view()).unwrap();
        let mse = err.mapv(|v| v * v).sum() / x.nrows() as f64;
        let discarded: f64 = lambda[latent..].iter().sum();
        assert!((mse - discarded).abs() < 0.03 * discarded, "latent {latent}: {mse} vs {discarded}");
    }
    let full = fit_compressor(&ds, 8).unwrap();
    assert!(nmse_db(x.view(), full.reconstruct(x.view()).unwrap().view()).unwrap() < -250.0);
}

#[test]
fn identical_distributions_give_flat_performance() {
    let family = generate_drift_family(4, 32, 2000, 0.0, 5).unwrap();
    let p = evaluate_performance_matrix(&family, &TaskSpec::new(8, 1)).unwrap();
    let lo = p.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = p.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi - lo <= 1.0, "spread {} dB", hi - lo);
}

#[test]
fn drift_family_diagonal_is_best_per_row() {
    let family = generate_drift_family(5, 32, 1000, 5.0, 8).unwrap();
    let p = evaluate_performance_matrix(&family, &TaskSpec::new(8, 2)).unwrap();
    for i in 0..5 {
        let best = p.values.row(i).iter().copied().fold(f64::INFINITY, f64::min);
        assert!(p.values[[i, i]] <= best + 0.5, "row {i}: {}", p.values.row(i));
    }
    assert!(performance_drop(&p).diag().iter().all(|&v| v == 0.0));
}

#[test]
fn single_dataset_matrix_holds_self_nmse() {
    let family = generate_drift_family(2, 6, 100, 1.0, 1).unwrap();
    let p = evaluate_performance_matrix(&family[..1], &TaskSpec::new(2, 0)).unwrap();
    assert_eq!(p.values.dim(), (1, 1));
    assert!(p.values[[0, 0]] < 0.0);
}

fn fake_d(labels: &[String], values: Array2<f64>) -> DistanceMatrix {
    let k = labels.len();
    DistanceMatrix {
        labels: labels.to_vec(),
        values,
        space: Space::Raw,
        metric: MetricSpec::new(MetricId::Wasserstein),
        entry_seconds: Array2::zeros((k, k)),
        seed: 0,
        config_hash: None,
    }
}

#[test]
fn proportional_distances_correlate_perfectly() {
    let family = generate_drift_family(4, 8, 300, 2.0, 3).unwrap();
    let p = evaluate_performance_matrix(&family, &TaskSpec::new(3, 0)).unwrap();
    let d = fake_d(&p.labels, performance_drop(&p) * 2.5);
    let row = correlate(&d, &p, DropMode::Delta, false).unwrap();
    assert!((row.r - 1.0).abs() < 1e-12);
    assert_eq!(row.n_pairs, 12);
}

#[test]
fn reordering_datasets_leaves_r_unchanged() {
    let family = generate_drift_family(5, 8, 400, 2.0, 4).unwrap();
    let spec = MetricSpec::new(MetricId::Wasserstein);
    let task = TaskSpec::new(3, 1);
    let r_of = |sets: &[Dataset]| {
        let d = distance_matrix(sets, &spec, Space::Raw, None, 0).unwrap();
        let p = evaluate_performance_matrix(sets, &task).unwrap();
        correlate(&d, &p, DropMode::Delta, false).unwrap().r
    };
    let mut shuffled = family.clone();
    shuffled.reverse();
    shuffled.swap(0, 2);
    assert!((r_of(&family) - r_of(&shuffled)).abs() < 1e-12);
}

#[test]
fn correlation_uses_off_diagonal_pairs_against_an_oracle() {
    let family = generate_drift_family(4, 8, 300, 3.0, 6).unwrap();
    let p = evaluate_performance_matrix(&family, &TaskSpec::new(3, 0)).unwrap();
    let d = distance_matrix(&family, &MetricSpec::new(MetricId::CentroidEuclidean), Space::Raw, None, 0).unwrap();
    let dp = performance_drop(&p);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                xs.push(d.values[[i, j]]);
                ys.push(dp[[i, j]]);
            }
        }
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let want = cov / (vx * vy).sqrt();
    assert!((correlate(&d, &p, DropMode::Delta, false).unwrap().r - want).abs() < 1e-12);
    let raw = correlate(&d, &p, DropMode::Raw, true).unwrap();
    let all_d: Vec<f64> = d.values.iter().copied().collect();
    let all_p: Vec<f64> = p.values.iter().copied().collect();
    assert!((raw.r - pearson(&all_d, &all_p).unwrap()).abs() < 1e-12);
    assert_eq!(raw.n_pairs, 16);
}

#[test]
fn label_mismatch_names_the_dataset() {
    let family = generate_drift_family(3, 4, 50, 1.0, 2).unwrap();
    let p = evaluate_performance_matrix(&family, &TaskSpec::new(2, 0)).unwrap();
    let mut labels = p.labels.clone();
    labels[1] = "elsewhere".into();
    let err = correlate(&fake_d(&labels, Array2::zeros((3, 3))), &p, DropMode::Delta, false).unwrap_err();
    assert!(matches!(err, Error::LabelMismatch(_)));
    assert!(err.to_string().contains("elsewhere"), "{err}");
}

#[test]
fn two_datasets_are_degenerate() {
    let family = generate_drift_family(2, 4, 100, 1.0, 2).unwrap();
    let p = evaluate_performance_matrix(&family, &TaskSpec::new(2, 0)).unwrap();
    let d = distance_matrix(&family, &MetricSpec::new(MetricId::Wasserstein), Space::Raw, None, 0).unwrap();
    // a symmetric D is constant over the two off-diagonal pairs
    match correlate(&d, &p, DropMode::Delta, false) {
        Err(Error::UndefinedCorrelation(msg)) => assert!(msg.contains("K >= 3"), "{msg}"),
        other => panic!("expected undefined correlation, got {other:?}"),
    }
}

#[test]
fn benchmark_cells_compose_correlate() {
    let family = generate_drift_family_with(&DriftFamilyConfig::new(4, 8, 200, 3.0, 9)).unwrap();
    let spec = BenchmarkSpec::new(TaskSpec::new(3, 4), 4);
    let metric = MetricSpec::new(MetricId::Wasserstein);
    let one = run_benchmark(&family, std::slice::from_ref(&metric), &[Space::Raw], &spec).unwrap();
    assert_eq!(one.report.rows.len(), 1);
    let normalised: Vec<Dataset> = family
        .iter()
        .map(|d| dsim_core::data_io::normalize(d, spec.task.normalization).unwrap())
        .collect();
    let d = distance_matrix(&normalised, &metric, Space::Raw, None, spec.seed).unwrap();
    let p = evaluate_performance_matrix(&family, &spec.task).unwrap();
    let direct = correlate(&d, &p, DropMode::Delta, false).unwrap();
    assert_eq!(one.report.rows[0].r, direct.r);
    assert_eq!(one.distances[0].values, d.values);

    let two = run_benchmark(&family, &[metric], &[Space::Raw, Space::Pca], &spec).unwrap();
    let spaces: Vec<Space> = two.report.rows.iter().map(|r| r.space).collect();
    assert_eq!(two.report.rows.len(), 2);
    assert!(spaces.contains(&Space::Raw) && spaces.contains(&Space::Pca));
    assert!(two.report.to_json().unwrap().contains("\"pca\""));
}

#[test]
fn failing_cells_are_recorded_not_fatal() {
    let family = generate_drift_family(3, 4, 30, 1.0, 1).unwrap();
    let spec = BenchmarkSpec::new(TaskSpec::new(2, 0), 0);
    let mut pad = MetricSpec::new(MetricId::Pad);
    pad.options.pad.folds = 50;
    let out = run_benchmark(&family, &[pad, MetricSpec::new(MetricId::Energy)], &[Space::Raw], &spec).unwrap();
    assert_eq!(out.report.rows.len(), 1);
    assert_eq!(out.report.failures.len(), 1);
    assert_eq!(out.report.failures[0].metric, Some(MetricId::Pad));
    assert!(out.report.to_table().contains("FAILED pad"));
}

#[test]
fn drop_matrix_arithmetic() {
    let family = generate_drift_family(3, 4, 30, 1.0, 1).unwrap();
    let mut p = evaluate_performance_matrix(&family, &TaskSpec::new(2, 0)).unwrap();
    p.values = Array2::from_shape_fn((3, 3), |(i, j)| if i == j { -25.0 } else { -10.0 });
    let dp = performance_drop(&p);
    assert_eq!(dp[[0, 1]], 15.0);
    assert_eq!(dp.diag().to_owned(), Array1::<f64>::zeros(3));
}
