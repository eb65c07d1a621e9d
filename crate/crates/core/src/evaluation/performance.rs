//! Cross-dataset performance matrices.

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compressor::{fit_compressor_points, nmse_db};
use crate::data_io::{check_same_dim, normalize, Dataset, Normalization};
use crate::error::{Error, Result};
use crate::numerics::rng::{derive_seed, permutation, str_hash};

pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub latent_dim: usize,
    #[serde(default)]
    pub normalization: Normalization,
    pub seed: u64,
}

impl TaskSpec {
    pub fn new(latent_dim: usize, seed: u64) -> Self {
        Self {
            latent_dim,
            normalization: Normalization::PerSampleUnitNorm,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerformanceMatrix {
    pub labels: Vec<String>,
    /// NMSE in dB; row = training dataset, column = test dataset.
    pub values: Array2<f64>,
    pub task: TaskSpec,
    /// Datasets whose training split was rank-deficient.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rank_deficient: Vec<String>,
}

impl PerformanceMatrix {
    pub fn to_csv(&self) -> String {
        crate::distances::matrix_csv(&self.labels, &self.values)
    }

    pub fn drop_csv(&self) -> String {
        crate::distances::matrix_csv(&self.labels, &performance_drop(self))
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: Self = serde_json::from_str(&text)?;
        let k = p.labels.len();
        if p.values.dim() != (k, k) {
            return Err(Error::Format {
                format: "performance json",
                msg: format!("expected a {k}x{k} matrix"),
            });
        }
        Ok(p)
    }
}

/// Seeded train/held-out split of `m` rows; both parts non-empty for m >= 2.
pub fn train_test_split(m: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let perm = permutation(m, seed);
    let n_train = ((m as f64 * TRAIN_FRACTION).round() as usize).clamp(1, m.saturating_sub(1).max(1));
    let (mut train, mut test) = (perm[..n_train].to_vec(), perm[n_train..].to_vec());
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// `P[i][j]`: NMSE of the compressor fitted on the training split of
/// dataset i, evaluated on the held-out split of i (j = i) or all of j.
pub fn evaluate_performance_matrix(datasets: &[Dataset], task: &TaskSpec) -> Result<PerformanceMatrix> {
    let prepared = datasets
        .iter()
        .map(|d| normalize(d, task.normalization))
        .collect::<Result<Vec<_>>>()?;
    performance_on_prepared(&prepared, task)
}

pub(crate) fn performance_on_prepared(datasets: &[Dataset], task: &TaskSpec) -> Result<PerformanceMatrix> {
    if datasets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_same_dim(datasets)?;
    let k = datasets.len();
    let rows: Vec<Result<(Vec<f64>, Option<String>)>> = datasets
        .par_iter()
        .map(|d| {
            let (train, test) = train_test_split(d.n_points(), derive_seed(task.seed, &[str_hash(&d.name)]));
            if test.is_empty() {
                return Err(Error::param("dataset", format!("`{}` needs at least 2 points for a held-out split", d.name)));
            }
            let model = fit_compressor_points(d.points.select(Axis(0), &train).view(), task.latent_dim, &d.name)?;
            let flagged = model.rank_deficient.map(|_| d.name.clone());
            let row = datasets
                .iter()
                .map(|t| {
                    let x = if t.name == d.name {
                        t.points.select(Axis(0), &test)
                    } else {
                        t.points.clone()
                    };
                    nmse_db(x.view(), model.reconstruct(x.view())?.view())
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((row, flagged))
        })
        .collect();
    let mut values = Array2::zeros((k, k));
    let mut rank_deficient = Vec::new();
    for (i, r) in rows.into_iter().enumerate() {
        let (row, flagged) = r?;
        values.row_mut(i).assign(&ndarray::Array1::from(row));
        rank_deficient.extend(flagged);
    }
    Ok(PerformanceMatrix {
        labels: datasets.iter().map(|d| d.name.clone()).collect(),
        values,
        task: task.clone(),
        rank_deficient,
    })
}

/// `dP[i][j] = P[i][j] - P[i][i]`.
pub fn performance_drop(p: &PerformanceMatrix) -> Array2<f64> {
    let mut d = p.values.clone();
    for (i, mut row) in d.rows_mut().into_iter().enumerate() {
        let base = p.values[[i, i]];
        row.mapv_inplace(|v| v - base);
        row[i] = 0.0;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn pm(values: Array2<f64>) -> PerformanceMatrix {
        PerformanceMatrix {
            labels: (0..values.nrows()).map(|i| i.to_string()).collect(),
            values,
            task: TaskSpec::new(1, 0),
            rank_deficient: vec![],
        }
    }

    #[test]
    fn drop_examples() {
        let d = performance_drop(&pm(array![[-25.0, -10.0], [-3.0, -3.0]]));
        assert_eq!(d, array![[0.0, 15.0], [0.0, 0.0]]);
    }

    #[test]
    fn split_sizes() {
        let (tr, te) = train_test_split(10, 3);
        assert_eq!((tr.len(), te.len()), (8, 2));
        let (tr, te) = train_test_split(2, 3);
        assert_eq!((tr.len(), te.len()), (1, 1));
    }

    #[test]
    fn single_dataset() {
        let x = ndarray::Array2::from_shape_fn((20, 3), |(i, j)| ((i * 5 + j * 3) % 7) as f64 + 1.0);
        let ds = Dataset::new("a", x, "t").unwrap();
        let p = evaluate_performance_matrix(&[ds], &TaskSpec::new(3, 0)).unwrap();
        assert_eq!(p.values.dim(), (1, 1));
        assert_eq!(p.values[[0, 0]], -300.0);
    }
}
