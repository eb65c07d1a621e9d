use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::rng::sample_indices;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Scale every row to unit Euclidean norm.
    PerSampleUnitNorm,
    /// Per-feature zero mean, unit (population) standard deviation.
    GlobalStandardize,
    #[default]
    None,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-sample-unit-norm" => Ok(Normalization::PerSampleUnitNorm),
            "global-standardize" => Ok(Normalization::GlobalStandardize),
            "none" => Ok(Normalization::None),
            other => Err(Error::param(
                "normalization",
                format!("unknown mode `{other}` (per-sample-unit-norm|global-standardize|none)"),
            )),
        }
    }
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Normalization::PerSampleUnitNorm => "per-sample-unit-norm",
            Normalization::GlobalStandardize => "global-standardize",
            Normalization::None => "none",
        })
    }
}

pub fn normalize(ds: &Dataset, mode: Normalization) -> Result<Dataset> {
    let points = match mode {
        Normalization::None => return Ok(ds.clone()),
        Normalization::PerSampleUnitNorm => {
            let mut p = ds.points.clone();
            for (row, mut r) in p.rows_mut().into_iter().enumerate() {
                let norm = r.dot(&r).sqrt();
                if norm == 0.0 {
                    return Err(Error::ZeroNormRow {
                        dataset: ds.name.clone(),
                        row,
                    });
                }
                r.mapv_inplace(|x| x / norm);
            }
            p
        }
        Normalization::GlobalStandardize => standardize(&ds.points),
    };
    Ok(ds.derived(points, format!("normalize({mode})")))
}

fn standardize(points: &Array2<f64>) -> Array2<f64> {
    let mean = points.mean_axis(Axis(0)).expect("non-empty");
    let std = points.std_axis(Axis(0), 0.0);
    let mut out = points - &mean;
    for (mut col, &s) in out.columns_mut().into_iter().zip(std.iter()) {
        if s > 0.0 {
            col.mapv_inplace(|x| x / s);
        } else {
            col.fill(0.0);
        }
    }
    out
}

/// Uniform sample of `min(M, max_points)` distinct rows, kept in their
/// original relative order.
pub fn subsample(ds: &Dataset, max_points: usize, seed: u64) -> Result<Dataset> {
    if max_points == 0 {
        return Err(Error::param("max_points", "must be >= 1"));
    }
    if ds.n_points() <= max_points {
        return Ok(ds.clone());
    }
    let idx = sample_indices(ds.n_points(), max_points, seed);
    let points = ds.points.select(Axis(0), &idx);
    Ok(ds.derived(points, format!("subsample(max_points={max_points}, seed={seed})")))
}

/// Indices chosen by [`subsample`], for callers that need them.
pub fn subsample_indices(n: usize, max_points: usize, seed: u64) -> Vec<usize> {
    sample_indices(n, max_points, seed)
}
