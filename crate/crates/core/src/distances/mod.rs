//! Dataset-to-dataset distances and distance-matrix assembly.
//!
//! Every metric is evaluated on a canonical ordering of its two arguments
//! (smaller dataset first, ties broken by content), so `m(A, B)` and
//! `m(B, A)` run the exact same arithmetic.

mod euclid;
mod kernel;
mod pad;
mod subspace;
mod univariate;

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::{check_same_dim, Dataset};
use crate::embeddings::{EmbeddingModel, Space};
use crate::error::{Error, Result};
use crate::numerics::rng::{derive_seed, sample_indices, str_hash};

pub use euclid::{d_centroid_euclidean, d_clustered_euclidean, d_cosine, d_pairwise_euclidean};
pub use kernel::{d_energy, d_mmd_linear, d_mmd_rbf, median_bandwidth, Bandwidth, BANDWIDTH_MAX_POINTS};
pub use pad::{d_pad, pad_design, pad_error, pad_folds, train_logistic, PadSettings, PAD_MIN_POINTS};
pub use subspace::{default_rank, d_subspace, principal_angles, subspace_basis, subspace_distance, SubspaceKind};
pub use univariate::{
    d_hist_divergence, d_ks, d_wasserstein, hellinger, js_divergence, kl_divergence, kl_symmetric, ks_1d,
    total_variation, wasserstein_1d, HistKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    PairwiseEuclidean,
    ClusteredEuclidean,
    CentroidEuclidean,
    Cosine,
    Kl,
    JensenShannon,
    Hellinger,
    Wasserstein,
    KolmogorovSmirnov,
    TotalVariation,
    MmdLinear,
    MmdRbf,
    Energy,
    Grassmann,
    Chordal,
    Asimov,
    Pad,
}

impl MetricId {
    pub const ALL: [MetricId; 17] = [
        MetricId::PairwiseEuclidean,
        MetricId::ClusteredEuclidean,
        MetricId::CentroidEuclidean,
        MetricId::Cosine,
        MetricId::Kl,
        MetricId::JensenShannon,
        MetricId::Hellinger,
        MetricId::Wasserstein,
        MetricId::KolmogorovSmirnov,
        MetricId::TotalVariation,
        MetricId::MmdLinear,
        MetricId::MmdRbf,
        MetricId::Energy,
        MetricId::Grassmann,
        MetricId::Chordal,
        MetricId::Asimov,
        MetricId::Pad,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::PairwiseEuclidean => "pairwise_euclidean",
            MetricId::ClusteredEuclidean => "clustered_euclidean",
            MetricId::CentroidEuclidean => "centroid_euclidean",
            MetricId::Cosine => "cosine",
            MetricId::Kl => "kl",
            MetricId::JensenShannon => "jensen_shannon",
            MetricId::Hellinger => "hellinger",
            MetricId::Wasserstein => "wasserstein",
            MetricId::KolmogorovSmirnov => "kolmogorov_smirnov",
            MetricId::TotalVariation => "total_variation",
            MetricId::MmdLinear => "mmd_linear",
            MetricId::MmdRbf => "mmd_rbf",
            MetricId::Energy => "energy",
            MetricId::Grassmann => "grassmann",
            MetricId::Chordal => "chordal",
            MetricId::Asimov => "asimov",
            MetricId::Pad => "pad",
        }
    }

    /// PAD depends on a seeded subsample and fold split.
    pub fn is_stochastic(self) -> bool {
        self == MetricId::Pad
    }

    /// Metrics evaluated on seeded subsamples capped at `max_points`.
    pub fn is_subsampled(self) -> bool {
        matches!(
            self,
            MetricId::PairwiseEuclidean | MetricId::Cosine | MetricId::Energy | MetricId::MmdLinear | MetricId::MmdRbf | MetricId::Pad
        )
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            let valid: Vec<&str> = MetricId::ALL.iter().map(|m| m.as_str()).collect();
            Error::param("metric", format!("unknown metric `{s}`; valid ids: {}", valid.join(", ")))
        })
    }
}

fn default_k() -> usize {
    8
}
fn default_bins() -> usize {
    crate::numerics::stats::DEFAULT_BINS
}
fn default_max_points() -> usize {
    2000
}
fn default_bandwidth() -> Bandwidth {
    Bandwidth::Median
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    /// Clusters per dataset for `clustered_euclidean`.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Subspace rank; `None` means `min(16, N)`.
    #[serde(default)]
    pub rank: Option<usize>,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: Bandwidth,
    #[serde(default)]
    pub pad: PadSettings,
    /// Report directed KL(A || B) instead of the symmetrised value.
    #[serde(default)]
    pub directed_kl: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            k: default_k(),
            bins: default_bins(),
            rank: None,
            max_points: default_max_points(),
            bandwidth: default_bandwidth(),
            pad: PadSettings::default(),
            directed_kl: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub id: MetricId,
    #[serde(default)]
    pub options: MetricOptions,
}

/// Total order on datasets used to canonicalise argument order.
fn dataset_order(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Ordering {
    a.dim().cmp(&b.dim()).then_with(|| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

impl MetricSpec {
    pub fn new(id: MetricId) -> Self {
        Self {
            id,
            options: MetricOptions::default(),
        }
    }

    pub fn with_max_points(mut self, max_points: usize) -> Self {
        self.options.max_points = max_points;
        self
    }

    pub fn is_symmetric(&self) -> bool {
        !(self.id == MetricId::Kl && self.options.directed_kl)
    }

    pub fn validate(&self) -> Result<()> {
        let o = &self.options;
        if o.max_points == 0 {
            return Err(Error::param("max_points", "must be >= 1"));
        }
        match self.id {
            MetricId::ClusteredEuclidean if o.k == 0 => Err(Error::param("k", "must be >= 1")),
            MetricId::Kl | MetricId::JensenShannon | MetricId::Hellinger | MetricId::TotalVariation if o.bins < 2 => {
                Err(Error::param("bins", format!("need bins >= 2, got {}", o.bins)))
            }
            MetricId::Grassmann | MetricId::Chordal | MetricId::Asimov if o.rank == Some(0) => {
                Err(Error::param("rank", "must be >= 1"))
            }
            MetricId::MmdRbf => match o.bandwidth {
                Bandwidth::Fixed(h) if !(h > 0.0 && h.is_finite()) => {
                    Err(Error::param("bandwidth", format!("fixed bandwidth must be positive, got {h}")))
                }
                _ => Ok(()),
            },
            MetricId::Pad if o.pad.folds < 2 || o.pad.epochs == 0 || !(o.pad.learning_rate > 0.0) => Err(
                Error::param("pad", "need folds >= 2, epochs >= 1 and a positive learning rate"),
            ),
            _ => Ok(()),
        }
    }

    /// Evaluates the metric on one pair. `seed` drives every random choice
    /// (subsampling, k-means restarts, PAD folds).
    pub fn compute(&self, a: ArrayView2<f64>, b: ArrayView2<f64>, seed: u64) -> Result<f64> {
        self.validate()?;
        let (a, b) = if self.is_symmetric() && dataset_order(a, b) == Ordering::Greater {
            (b, a)
        } else {
            (a, b)
        };
        if self.id.is_subsampled() {
            let sub_seed = derive_seed(seed, &[0x5AB]);
            let cap = self.options.max_points;
            let pick = |m: ArrayView2<f64>| -> Array2<f64> {
                if m.nrows() > cap {
                    m.select(Axis(0), &sample_indices(m.nrows(), cap, sub_seed))
                } else {
                    m.to_owned()
                }
            };
            let (sa, sb) = (pick(a), pick(b));
            return self.dispatch(sa.view(), sb.view(), seed);
        }
        self.dispatch(a, b, seed)
    }

    fn dispatch(&self, a: ArrayView2<f64>, b: ArrayView2<f64>, seed: u64) -> Result<f64> {
        let o = &self.options;
        let rank = || o.rank.unwrap_or_else(|| default_rank(a.ncols()));
        match self.id {
            MetricId::PairwiseEuclidean => d_pairwise_euclidean(a, b),
            MetricId::ClusteredEuclidean => d_clustered_euclidean(a, b, o.k, seed),
            MetricId::CentroidEuclidean => d_centroid_euclidean(a, b),
            MetricId::Cosine => d_cosine(a, b),
            MetricId::Kl => d_hist_divergence(a, b, HistKind::Kl, o.bins, o.directed_kl),
            MetricId::JensenShannon => d_hist_divergence(a, b, HistKind::JensenShannon, o.bins, false),
            MetricId::Hellinger => d_hist_divergence(a, b, HistKind::Hellinger, o.bins, false),
            MetricId::TotalVariation => d_hist_divergence(a, b, HistKind::TotalVariation, o.bins, false),
            MetricId::Wasserstein => d_wasserstein(a, b),
            MetricId::KolmogorovSmirnov => d_ks(a, b),
            MetricId::MmdLinear => d_mmd_linear(a, b),
            MetricId::MmdRbf => d_mmd_rbf(a, b, o.bandwidth, seed),
            MetricId::Energy => d_energy(a, b),
            MetricId::Grassmann => d_subspace(a, b, SubspaceKind::Grassmann, rank()),
            MetricId::Chordal => d_subspace(a, b, SubspaceKind::Chordal, rank()),
            MetricId::Asimov => d_subspace(a, b, SubspaceKind::Asimov, rank()),
            MetricId::Pad => d_pad(a, b, &o.pad, seed),
        }
    }
}

/// Seed for entry `(i, j)`: independent of the schedule and of argument order.
pub fn entry_seed(global: u64, i: usize, j: usize, metric: MetricId) -> u64 {
    derive_seed(global, &[i.min(j) as u64, i.max(j) as u64, str_hash(metric.as_str())])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub labels: Vec<String>,
    pub values: Array2<f64>,
    pub space: Space,
    pub metric: MetricSpec,
    /// Wall-clock seconds per computed entry; mirrored and diagonal
    /// entries are not computed and record 0.
    pub entry_seconds: Array2<f64>,
    pub seed: u64,
    #[serde(default)]
    pub config_hash: Option<String>,
}

impl DistanceMatrix {
    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn total_seconds(&self) -> f64 {
        self.entry_seconds.sum()
    }

    /// CSV with dataset names as header row and first column.
    pub fn to_csv(&self) -> String {
        matrix_csv(&self.labels, &self.values)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn read_sidecar(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text)?;
        let k = m.labels.len();
        if m.values.dim() != (k, k) || m.entry_seconds.dim() != (k, k) {
            return Err(Error::Format {
                format: "distance sidecar",
                msg: format!("expected {k}x{k} matrices for {k} labels"),
            });
        }
        Ok(m)
    }
}

pub(crate) fn matrix_csv(labels: &[String], values: &Array2<f64>) -> String {
    let mut out = String::new();
    out.push_str(&std::iter::once(String::new()).chain(labels.iter().cloned()).collect::<Vec<_>>().join(","));
    out.push('\n');
    for (name, row) in labels.iter().zip(values.rows()) {
        out.push_str(name);
        for v in row {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

/// K x K distance matrix for one metric in one space.
///
/// For `space != raw` the coordinates come from `embedding`, which must
/// have been fitted on exactly these datasets. Symmetric metrics compute
/// the upper triangle and mirror it; the diagonal is 0. Entries run on the
/// current rayon pool and each draws its own seed, so the result does not
/// depend on the thread count.
pub fn distance_matrix(
    datasets: &[Dataset],
    metric: &MetricSpec,
    space: Space,
    embedding: Option<&EmbeddingModel>,
    seed: u64,
) -> Result<DistanceMatrix> {
    if datasets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_same_dim(datasets)?;
    metric.validate()?;
    let embedded;
    let sets: &[Dataset] = match (space, embedding) {
        (Space::Raw, _) => datasets,
        (_, Some(model)) => {
            embedded = model.embedded_datasets(datasets)?;
            &embedded
        }
        (_, None) => {
            return Err(Error::param("embedding", format!("space `{space}` needs a fitted embedding")));
        }
    };
    let k = sets.len();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .filter(|&(i, j)| if metric.is_symmetric() { i < j } else { i != j })
        .collect();
    let results: Vec<Result<(f64, f64)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let start = Instant::now();
            let v = metric
                .compute(sets[i].view(), sets[j].view(), entry_seed(seed, i, j, metric.id))
                .map_err(|e| Error::Entry {
                    i,
                    j,
                    source: Box::new(e),
                })?;
            if !v.is_finite() {
                return Err(Error::Entry {
                    i,
                    j,
                    source: Box::new(Error::Diverged(format!("{} returned {v}", metric.id))),
                });
            }
            Ok((v, start.elapsed().as_secs_f64()))
        })
        .collect();
    let mut values = Array2::zeros((k, k));
    let mut seconds = Array2::zeros((k, k));
    for (&(i, j), r) in pairs.iter().zip(results) {
        let (v, t) = r?;
        values[[i, j]] = v;
        seconds[[i, j]] = t;
        if metric.is_symmetric() {
            values[[j, i]] = v;
        }
    }
    Ok(DistanceMatrix {
        labels: sets.iter().map(|d| d.name.clone()).collect(),
        values,
        space,
        metric: metric.clone(),
        entry_seconds: seconds,
        seed,
        config_hash: None,
    })
}
