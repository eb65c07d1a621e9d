//! Synthetic drift families: sequences of Gaussian-mixture datasets whose
//! means slide along one fixed direction.
//!
//! Dataset `t` is a two-component mixture with shared diagonal covariance,
//! components at `base +/- (separation / 2) w`, translated by
//! `t * shift_step * u`. `u` (drift) and `w` (mixture axis) are random unit
//! vectors fixed by the seed, `w` orthogonal to `u`.

use ndarray::{Array1, Array2};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::rng::{derive_seed, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftFamilyConfig {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub shift_step: f64,
    pub seed: u64,
    /// Distance between the two mixture components.
    pub separation: f64,
    /// Norm of the common offset shared by every dataset.
    pub base_offset: f64,
    /// Feature `i` has standard deviation `1 / sqrt(1 + i / decay)`; `None`
    /// gives unit variance in every feature.
    #[serde(default)]
    pub spectrum_decay: Option<f64>,
}

impl DriftFamilyConfig {
    pub fn new(k: usize, n: usize, m: usize, shift_step: f64, seed: u64) -> Self {
        Self {
            k,
            n,
            m,
            shift_step,
            seed,
            separation: 4.0,
            base_offset: 20.0,
            spectrum_decay: None,
        }
    }

    pub fn describe(&self) -> String {
        format!(
            "drift-family(k={}, n={}, m={}, shift_step={}, seed={}, separation={}, base_offset={}, spectrum_decay={:?})",
            self.k, self.n, self.m, self.shift_step, self.seed, self.separation, self.base_offset, self.spectrum_decay
        )
    }
}

/// Fixed geometry of a family: drift direction, mixture axis, base offset
/// and per-feature scales.
#[derive(Debug, Clone)]
pub struct DriftGeometry {
    pub drift: Array1<f64>,
    pub mixture_axis: Array1<f64>,
    pub base: Array1<f64>,
    pub scales: Array1<f64>,
}

fn random_unit(n: usize, rng: &mut impl rand::Rng, against: &[&Array1<f64>]) -> Array1<f64> {
    loop {
        let mut v: Array1<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for a in against {
            let p = v.dot(*a);
            v.scaled_add(-p, a);
        }
        let norm = v.dot(&v).sqrt();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

pub fn drift_geometry(cfg: &DriftFamilyConfig) -> DriftGeometry {
    let mut r = rng(derive_seed(cfg.seed, &[0xD41F7]));
    let drift = random_unit(cfg.n, &mut r, &[]);
    let mixture_axis = if cfg.n > 1 {
        random_unit(cfg.n, &mut r, &[&drift])
    } else {
        drift.clone()
    };
    let base = if cfg.n > 2 {
        random_unit(cfg.n, &mut r, &[&drift, &mixture_axis]) * cfg.base_offset
    } else {
        Array1::zeros(cfg.n)
    };
    let scales = (0..cfg.n)
        .map(|i| cfg.spectrum_decay.map_or(1.0, |decay| 1.0 / (1.0 + i as f64 / decay).sqrt()))
        .collect();
    DriftGeometry {
        drift,
        mixture_axis,
        base,
        scales,
    }
}

pub fn generate_drift_family_with(cfg: &DriftFamilyConfig) -> Result<Vec<Dataset>> {
    if cfg.k < 2 {
        return Err(Error::param("k", "need at least 2 datasets"));
    }
    if cfg.n == 0 || cfg.m == 0 {
        return Err(Error::param("shape", "n and m must be >= 1"));
    }
    if !cfg.shift_step.is_finite() {
        return Err(Error::param("shift_step", "must be finite"));
    }
    let geo = drift_geometry(cfg);
    let half_sep = cfg.separation / 2.0;
    (0..cfg.k)
        .map(|t| {
            let mut r = rng(derive_seed(cfg.seed, &[t as u64 + 1]));
            let centre = &geo.base + &(&geo.drift * (t as f64 * cfg.shift_step));
            let mut pts = Array2::<f64>::zeros((cfg.m, cfg.n));
            for mut row in pts.rows_mut() {
                let sign = if r.random::<bool>() { half_sep } else { -half_sep };
                for (c, x) in row.iter_mut().enumerate() {
                    let z: f64 = StandardNormal.sample(&mut r);
                    *x = centre[c] + sign * geo.mixture_axis[c] + geo.scales[c] * z;
                }
            }
            let mut ds = Dataset::new(format!("drift_{t:02}"), pts, cfg.describe())?;
            ds.preprocessing.push(format!("generated(t={t})"));
            Ok(ds)
        })
        .collect()
}

/// Family of `k` datasets with default mixture/offset/spectrum settings.
pub fn generate_drift_family(k: usize, n: usize, m: usize, shift_step: f64, seed: u64) -> Result<Vec<Dataset>> {
    generate_drift_family_with(&DriftFamilyConfig::new(k, n, m, shift_step, seed))
}
