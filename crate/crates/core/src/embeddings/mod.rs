//! Jointly fitted dimensionality reductions.
//!
//! Every model is fitted on the union of the datasets under comparison so
//! that embedded coordinates of different datasets share one frame. Rows of
//! each dataset are put in a canonical (lexicographic) order before fitting,
//! which makes a fit independent of the order rows arrive in.

mod pca;
mod tsne;
pub mod umap;

use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data_io::{check_same_dim, Dataset};
use crate::error::{Error, Result};

pub use pca::fit_pca;
pub use tsne::{embed_tsne, TsneParams, TSNE_MAX_POINTS};
pub use umap::{
    build_fuzzy_graph, fit_curve_ab, fit_umap, optimize_layout, smooth_knn_calibrate, FuzzyGraph,
    UmapParams,
};

/// The space a distance is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Space {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "pca")]
    Pca,
    #[serde(rename = "umap")]
    Umap,
    #[serde(rename = "tsne")]
    Tsne,
    #[serde(rename = "pca+umap")]
    PcaUmap,
}

impl Space {
    pub const ALL: [Space; 5] = [Space::Raw, Space::Pca, Space::Umap, Space::Tsne, Space::PcaUmap];

    pub fn as_str(self) -> &'static str {
        match self {
            Space::Raw => "raw",
            Space::Pca => "pca",
            Space::Umap => "umap",
            Space::Tsne => "tsne",
            Space::PcaUmap => "pca+umap",
        }
    }

    pub fn kind(self) -> Option<EmbeddingKind> {
        match self {
            Space::Raw => None,
            Space::Pca => Some(EmbeddingKind::Pca),
            Space::Umap => Some(EmbeddingKind::Umap),
            Space::Tsne => Some(EmbeddingKind::Tsne),
            Space::PcaUmap => Some(EmbeddingKind::PcaUmap),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Space::ALL
            .into_iter()
            .find(|sp| sp.as_str() == s)
            .ok_or_else(|| Error::param("space", format!("unknown space `{s}` (raw|pca|umap|tsne|pca+umap)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Pca,
    Umap,
    Tsne,
    #[serde(rename = "pca+umap")]
    PcaUmap,
}

/// Stacked datasets with the row range each one occupies.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub points: Array2<f64>,
    pub ranges: Vec<DatasetRange>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRange {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

impl DatasetRange {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

impl Corpus {
    pub fn stack(datasets: &[Dataset]) -> Result<Self> {
        check_same_dim(datasets)?;
        let views: Vec<ArrayView2<f64>> = datasets.iter().map(|d| d.view()).collect();
        let points = ndarray::concatenate(Axis(0), &views).map_err(|e| Error::param("corpus", e.to_string()))?;
        let mut start = 0;
        let ranges = datasets
            .iter()
            .map(|d| {
                let r = DatasetRange {
                    name: d.name.clone(),
                    start,
                    end: start + d.n_points(),
                };
                start = r.end;
                r
            })
            .collect();
        Ok(Self { points, ranges })
    }

    pub fn from_matrix(points: Array2<f64>) -> Self {
        let ranges = vec![DatasetRange {
            name: "corpus".into(),
            start: 0,
            end: points.nrows(),
        }];
        Self { points, ranges }
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    /// Permutation putting rows of each dataset in lexicographic order,
    /// keeping datasets contiguous. `order[k]` is the original row at
    /// canonical position `k`.
    pub(crate) fn canonical_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.n_points());
        for r in &self.ranges {
            let mut idx: Vec<usize> = r.range().collect();
            idx.sort_by(|&a, &b| {
                self.points
                    .row(a)
                    .iter()
                    .zip(self.points.row(b).iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            order.extend(idx);
        }
        order
    }
}

/// Undo a canonical ordering: row `k` of `canon` belongs at `order[k]`.
pub(crate) fn restore_order(canon: &Array2<f64>, order: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros(canon.dim());
    for (k, &orig) in order.iter().enumerate() {
        out.row_mut(orig).assign(&canon.row(k));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaBasis {
    pub mean: Array1<f64>,
    /// N x d orthonormal projection basis.
    pub basis: Array2<f64>,
    /// Variance captured by each component.
    pub explained_variance: Array1<f64>,
    pub total_variance: f64,
}

impl PcaBasis {
    pub fn transform(&self, points: ArrayView2<f64>) -> Result<Array2<f64>> {
        if points.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: points.ncols(),
            });
        }
        Ok((&points - &self.mean).dot(&self.basis))
    }

    pub fn inverse_transform(&self, coords: ArrayView2<f64>) -> Array2<f64> {
        coords.dot(&self.basis.t()) + &self.mean
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UmapState {
    pub params: UmapParams,
    pub a: f64,
    pub b: f64,
    #[serde(skip)]
    pub graph: Option<FuzzyGraph>,
}

/// A fitted joint embedding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub kind: EmbeddingKind,
    /// Embedded corpus, rows in the original (stacked) order.
    pub coords: Array2<f64>,
    pub ranges: Vec<DatasetRange>,
    pub pca: Option<PcaBasis>,
    pub umap: Option<UmapState>,
    /// t-SNE objective per iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kl_trace: Vec<f64>,
}

impl EmbeddingModel {
    pub fn out_dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords_of(&self, name: &str) -> Option<ArrayView2<'_, f64>> {
        self.ranges
            .iter()
            .find(|r| r.name == name)
            .map(|r| self.coords.slice(ndarray::s![r.range(), ..]))
    }

    /// The fit corpus split back into per-dataset latent datasets.
    pub fn embedded_datasets(&self, source: &[Dataset]) -> Result<Vec<Dataset>> {
        source
            .iter()
            .map(|d| {
                let c = self.coords_of(&d.name).ok_or_else(|| {
                    Error::param("embedding", format!("dataset `{}` is not in the fit corpus", d.name))
                })?;
                if c.nrows() != d.n_points() {
                    return Err(Error::param(
                        "embedding",
                        format!("dataset `{}` has {} rows, embedding holds {}", d.name, d.n_points(), c.nrows()),
                    ));
                }
                let mut out = d.derived(c.to_owned(), format!("embed({:?}, d={})", self.kind, self.out_dim()));
                out.name = d.name.clone();
                Ok(out)
            })
            .collect()
    }

    /// Maps points into the latent space. Only linear (PCA) models accept
    /// points outside the fit corpus; for the others `points` must be the
    /// fit corpus itself.
    pub fn transform(&self, points: ArrayView2<f64>, corpus: ArrayView2<f64>) -> Result<Array2<f64>> {
        match (self.kind, &self.pca) {
            (EmbeddingKind::Pca, Some(p)) => p.transform(points),
            _ if points == corpus => Ok(self.coords.clone()),
            _ => Err(Error::param(
                "transform",
                "non-linear embeddings only cover their fit corpus; refit instead",
            )),
        }
    }

    /// CSV with a `dataset` column followed by the coordinates.
    pub fn write_coords_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        let header: Vec<String> = std::iter::once("dataset".to_string())
            .chain((0..self.out_dim()).map(|d| format!("z{d}")))
            .collect();
        writeln!(out, "{}", header.join(",")).expect("in-memory write");
        for r in &self.ranges {
            for i in r.range() {
                let vals: Vec<String> = self.coords.row(i).iter().map(|v| format!("{v}")).collect();
                writeln!(out, "{},{}", r.name, vals.join(",")).expect("in-memory write");
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Parameters for every latent space the toolkit can fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub pca_dim: usize,
    pub umap: UmapParams,
    pub tsne: TsneParams,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        Self {
            pca_dim: 32,
            umap: UmapParams::default(),
            tsne: TsneParams::default(),
        }
    }
}

/// Fits the joint embedding for `space` (`None` for raw space).
pub fn fit_space(datasets: &[Dataset], space: Space, spec: &EmbeddingSpec) -> Result<Option<EmbeddingModel>> {
    let corpus = Corpus::stack(datasets)?;
    let n = corpus.points.ncols();
    Ok(match space {
        Space::Raw => None,
        Space::Pca => Some(fit_pca(&corpus, spec.pca_dim.min(n))?),
        Space::Umap => Some(fit_umap(&corpus, &spec.umap)?),
        Space::Tsne => Some(embed_tsne(&corpus, &spec.tsne)?),
        Space::PcaUmap => {
            let pca = fit_pca(&corpus, spec.pca_dim.min(n))?;
            let reduced = Corpus {
                points: pca.coords.clone(),
                ranges: corpus.ranges.clone(),
            };
            let mut model = fit_umap(&reduced, &spec.umap)?;
            model.kind = EmbeddingKind::PcaUmap;
            model.pca = pca.pca;
            Some(model)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn canonical_order_is_per_dataset() {
        let a = Dataset::new("a", array![[2.0], [1.0]], "t").unwrap();
        let b = Dataset::new("b", array![[0.5], [3.0], [0.0]], "t").unwrap();
        let c = Corpus::stack(&[a, b]).unwrap();
        assert_eq!(c.canonical_order(), vec![1, 0, 4, 2, 3]);
        let canon = c.points.select(Axis(0), &c.canonical_order());
        assert_eq!(restore_order(&canon, &c.canonical_order()), c.points);
    }

    #[test]
    fn space_names_round_trip() {
        for s in Space::ALL {
            assert_eq!(s.as_str().parse::<Space>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.as_str()));
        }
        assert!("latent".parse::<Space>().is_err());
    }
}
