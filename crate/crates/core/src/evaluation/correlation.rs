//! Distance/performance correlation and the benchmark driver.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::performance::{performance_drop, performance_on_prepared, PerformanceMatrix, TaskSpec};
use crate::data_io::{normalize, subsample, Dataset};
use crate::distances::{distance_matrix, DistanceMatrix, MetricId, MetricSpec};
use crate::embeddings::{fit_space, EmbeddingModel, EmbeddingSpec, Space, TSNE_MAX_POINTS};
use crate::error::{Error, Result};
use crate::numerics::pearson;
use crate::numerics::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropMode {
    /// Correlate with `dP = P - diag(P)`.
    #[default]
    Delta,
    /// Correlate with `P` itself.
    Raw,
}

impl std::str::FromStr for DropMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(DropMode::Delta),
            "raw" => Ok(DropMode::Raw),
            _ => Err(Error::param("mode", format!("unknown mode `{s}` (delta|raw)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub metric: MetricId,
    pub space: Space,
    pub r: f64,
    /// Summed per-entry compute time of the distance matrix.
    #[serde(skip)]
    pub seconds: f64,
    pub n_pairs: usize,
    pub mode: DropMode,
    pub include_diagonal: bool,
}

/// Pearson r between vectorised `D` and `dP` (or `P`) over ordered pairs.
pub fn correlate(d: &DistanceMatrix, p: &PerformanceMatrix, mode: DropMode, include_diagonal: bool) -> Result<CorrelationRow> {
    if d.labels.len() != p.labels.len() {
        return Err(Error::LabelMismatch(format!(
            "distance matrix has {} datasets, performance matrix has {}",
            d.labels.len(),
            p.labels.len()
        )));
    }
    if let Some((a, b)) = d.labels.iter().zip(&p.labels).find(|(a, b)| a != b) {
        return Err(Error::LabelMismatch(format!(
            "dataset `{a}` in the distance matrix faces `{b}` in the performance matrix"
        )));
    }
    let y = match mode {
        DropMode::Delta => performance_drop(p),
        DropMode::Raw => p.values.clone(),
    };
    let k = d.labels.len();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..k {
        for j in 0..k {
            if i != j || include_diagonal {
                xs.push(d.values[[i, j]]);
                ys.push(y[[i, j]]);
            }
        }
    }
    let r = pearson(&xs, &ys).map_err(|e| match e {
        Error::UndefinedCorrelation(msg) => {
            Error::UndefinedCorrelation(format!("{msg} ({} vs {}); use K >= 3 datasets", d.metric.id, d.space))
        }
        other => other,
    })?;
    Ok(CorrelationRow {
        metric: d.metric.id,
        space: d.space,
        r,
        seconds: d.total_seconds(),
        n_pairs: xs.len(),
        mode,
        include_diagonal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub metric: Option<MetricId>,
    pub space: Space,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub datasets: Vec<String>,
    pub task: Option<TaskSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rows: Vec<CorrelationRow>,
    pub failures: Vec<CellFailure>,
    pub meta: ReportMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingEntry {
    pub metric: MetricId,
    pub space: Space,
    pub seconds: f64,
}

impl CorrelationReport {
    pub fn new(mut rows: Vec<CorrelationRow>, failures: Vec<CellFailure>, meta: ReportMeta) -> Self {
        rows.sort_by(|a, b| {
            b.r.abs()
                .total_cmp(&a.r.abs())
                .then_with(|| a.metric.cmp(&b.metric))
                .then_with(|| a.space.cmp(&b.space))
        });
        Self { rows, failures, meta }
    }

    pub fn row(&self, metric: MetricId, space: Space) -> Option<&CorrelationRow> {
        self.rows.iter().find(|r| r.metric == metric && r.space == space)
    }

    /// Machine-readable report. Timing lives in `timing()` so that this
    /// document is reproducible byte for byte.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn timing(&self) -> Vec<TimingEntry> {
        self.rows
            .iter()
            .map(|r| TimingEntry {
                metric: r.metric,
                space: r.space,
                seconds: r.seconds,
            })
            .collect()
    }

    /// Total compute seconds per metric across spaces.
    pub fn seconds_per_metric(&self) -> BTreeMap<MetricId, f64> {
        let mut out = BTreeMap::new();
        for r in &self.rows {
            *out.entry(r.metric).or_insert(0.0) += r.seconds;
        }
        out
    }

    /// Aligned text table sorted by |r|.
    pub fn to_table(&self) -> String {
        let header = ["metric", "space", "pearson_r", "pairs", "mode", "time_s"];
        let body: Vec<[String; 6]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.metric.to_string(),
                    r.space.to_string(),
                    format!("{:.4}", r.r),
                    r.n_pairs.to_string(),
                    format!("{:?}{}", r.mode, if r.include_diagonal { "+diag" } else { "" }).to_lowercase(),
                    format!("{:.3}", r.seconds),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[&str]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(c, (s, w))| if c < 2 || c == 4 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &header);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        let _ = writeln!(out, "{}", rule.join("  "));
        for row in &body {
            line(&mut out, &row.each_ref().map(String::as_str));
        }
        for f in &self.failures {
            let metric = f.metric.map_or("*".to_string(), |m| m.to_string());
            let _ = writeln!(out, "FAILED {metric} in {}: {}", f.space, f.error);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub task: TaskSpec,
    pub embedding: EmbeddingSpec,
    pub mode: DropMode,
    pub include_diagonal: bool,
    pub seed: u64,
}

impl BenchmarkSpec {
    pub fn new(task: TaskSpec, seed: u64) -> Self {
        let mut embedding = EmbeddingSpec::default();
        embedding.umap.seed = seed;
        embedding.tsne.seed = seed;
        Self {
            task,
            embedding,
            mode: DropMode::Delta,
            include_diagonal: false,
            seed,
        }
    }
}

/// Everything a benchmark run produced.
#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub report: CorrelationReport,
    pub performance: PerformanceMatrix,
    pub distances: Vec<DistanceMatrix>,
    pub embeddings: Vec<(Space, EmbeddingModel)>,
}

/// Computes P once, one joint embedding per space, and one distance matrix
/// per (metric, space) cell. Datasets are normalised with the task's mode
/// before both stages. A failing cell is recorded and the rest continue.
pub fn run_benchmark(
    datasets: &[Dataset],
    metrics: &[MetricSpec],
    spaces: &[Space],
    spec: &BenchmarkSpec,
) -> Result<BenchmarkOutput> {
    let prepared = datasets
        .iter()
        .map(|d| normalize(d, spec.task.normalization))
        .collect::<Result<Vec<_>>>()?;
    let performance = performance_on_prepared(&prepared, &spec.task)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut distances = Vec::new();
    let mut embeddings = Vec::new();
    for &space in spaces {
        let sets = if space == Space::Tsne {
            let cap = (TSNE_MAX_POINTS / prepared.len()).max(1);
            prepared
                .iter()
                .enumerate()
                .map(|(i, d)| subsample(d, cap, derive_seed(spec.seed, &[0x75E, i as u64])))
                .collect::<Result<Vec<_>>>()?
        } else {
            prepared.clone()
        };
        let model = match fit_space(&sets, space, &spec.embedding) {
            Ok(m) => m,
            Err(e) => {
                failures.push(CellFailure {
                    metric: None,
                    space,
                    error: e.to_string(),
                });
                continue;
            }
        };
        for metric in metrics {
            let cell = distance_matrix(&sets, metric, space, model.as_ref(), spec.seed)
                .and_then(|d| correlate(&d, &performance, spec.mode, spec.include_diagonal).map(|r| (d, r)));
            match cell {
                Ok((d, r)) => {
                    rows.push(r);
                    distances.push(d);
                }
                Err(e) => failures.push(CellFailure {
                    metric: Some(metric.id),
                    space,
                    error: e.to_string(),
                }),
            }
        }
        if let Some(m) = model {
            embeddings.push((space, m));
        }
    }
    let meta = ReportMeta {
        seed: spec.seed,
        datasets: datasets.iter().map(|d| d.name.clone()).collect(),
        task: Some(spec.task.clone()),
    };
    Ok(BenchmarkOutput {
        report: CorrelationReport::new(rows, failures, meta),
        performance,
        distances,
        embeddings,
    })
}
