//! Proxy A-distance from the cross-validated error of a linear domain
//! classifier.

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::euclid::check_dims;
use crate::error::{Error, Result};
use crate::numerics::rng::{derive_seed, permutation, sample_indices};

pub const PAD_MIN_POINTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PadSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub folds: usize,
}

impl Default for PadSettings {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.1,
            folds: 5,
        }
    }
}

/// Class-balanced, standardised design matrix: the first `n` rows come from
/// `a` (label 0), the next `n` from `b` (label 1), `n = min(M_a, M_b)`.
pub fn pad_design(a: ArrayView2<f64>, b: ArrayView2<f64>, seed: u64) -> Result<Array2<f64>> {
    check_dims(a, b)?;
    let n = a.nrows().min(b.nrows());
    if n < PAD_MIN_POINTS {
        return Err(Error::param(
            "pad",
            format!("each dataset needs at least {PAD_MIN_POINTS} points, got {n}"),
        ));
    }
    let ia = sample_indices(a.nrows(), n, derive_seed(seed, &[0]));
    let ib = sample_indices(b.nrows(), n, derive_seed(seed, &[1]));
    let mut x = concatenate(Axis(0), &[a.select(Axis(0), &ia).view(), b.select(Axis(0), &ib).view()])
        .expect("matching columns");
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let std = x.std_axis(Axis(0), 0.0);
    for (j, mut col) in x.columns_mut().into_iter().enumerate() {
        if std[j] > 0.0 {
            col.mapv_inplace(|v| (v - mean[j]) / std[j]);
        } else {
            col.fill(0.0);
        }
    }
    Ok(x)
}

/// Fold id for each of the `2 n` design rows: each class is permuted with
/// its own seed and dealt round-robin into `folds` folds.
pub fn pad_folds(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut out = vec![0; 2 * n];
    for class in 0..2 {
        for (pos, idx) in permutation(n, derive_seed(seed, &[2, class as u64])).into_iter().enumerate() {
            out[class * n + idx] = pos % folds;
        }
    }
    out
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Full-batch gradient descent on the mean logistic loss from zero weights.
/// Returns `(w, bias)`.
pub fn train_logistic(x: ArrayView2<f64>, y: &[f64], settings: &PadSettings) -> (Array1<f64>, f64) {
    let (m, n) = x.dim();
    let mut w = Array1::<f64>::zeros(n);
    let mut bias = 0.0;
    for _ in 0..settings.epochs {
        let z = x.dot(&w) + bias;
        let resid: Array1<f64> = z.iter().zip(y).map(|(&z, &t)| sigmoid(z) - t).collect();
        let gw = x.t().dot(&resid) / m as f64;
        let gb = resid.sum() / m as f64;
        w.scaled_add(-settings.learning_rate, &gw);
        bias -= settings.learning_rate * gb;
    }
    (w, bias)
}

/// Cross-validated misclassification rate of the domain classifier.
pub fn pad_error(a: ArrayView2<f64>, b: ArrayView2<f64>, settings: &PadSettings, seed: u64) -> Result<f64> {
    if settings.folds < 2 {
        return Err(Error::param("pad.folds", "need at least 2 folds"));
    }
    let x = pad_design(a, b, seed)?;
    let n = x.nrows() / 2;
    if settings.folds > n {
        return Err(Error::param("pad.folds", format!("more folds ({}) than points per class ({n})", settings.folds)));
    }
    let labels: Vec<f64> = (0..2 * n).map(|i| if i < n { 0.0 } else { 1.0 }).collect();
    let folds = pad_folds(n, settings.folds, seed);
    let mut errors = 0usize;
    for f in 0..settings.folds {
        let train: Vec<usize> = (0..2 * n).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..2 * n).filter(|&i| folds[i] == f).collect();
        let ytrain: Vec<f64> = train.iter().map(|&i| labels[i]).collect();
        let (w, bias) = train_logistic(x.select(Axis(0), &train).view(), &ytrain, settings);
        for &i in &test {
            let predicted = if x.row(i).dot(&w) + bias > 0.0 { 1.0 } else { 0.0 };
            if predicted != labels[i] {
                errors += 1;
            }
        }
    }
    Ok(errors as f64 / (2 * n) as f64)
}

pub fn d_pad(a: ArrayView2<f64>, b: ArrayView2<f64>, settings: &PadSettings, seed: u64) -> Result<f64> {
    let eps = pad_error(a, b, settings, seed)?;
    Ok((2.0 * (1.0 - 2.0 * eps)).clamp(0.0, 2.0))
}
