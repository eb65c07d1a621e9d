mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsim_core::numerics::KnnMetric;
use dsim_core::{DropMode, Normalization, Space};

#[derive(Debug, Parser)]
#[command(name = "dsim", version, about = "Dataset distances, latent spaces and distance/performance correlation")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Dataset manifest (JSON).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Global seed for every stochastic stage.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Per-dataset row cap; overrides the manifest limit.
    #[arg(long, global = true)]
    pub max_points: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Normalization applied to every dataset before any stage.
    #[arg(long, default_value = "per-sample-unit-norm")]
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Args)]
pub struct EmbedArgs {
    /// Latent dimension of the embedding (PCA stage of pca+umap stays at --pca-dim).
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 32)]
    pub pca_dim: usize,
    #[arg(long, default_value_t = 15)]
    pub neighbors: usize,
    #[arg(long, default_value_t = 0.1)]
    pub min_dist: f64,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    /// kNN metric for UMAP (correlation|euclidean).
    #[arg(long, default_value = "correlation")]
    pub knn_metric: KnnMetric,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
}

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    /// Clusters per dataset for clustered_euclidean.
    #[arg(long, default_value_t = 8)]
    pub clusters: usize,
    /// Histogram bins for kl, jensen_shannon, hellinger, total_variation.
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    /// Subspace rank for grassmann, chordal, asimov (default min(16, N)).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Report directed KL(A||B) instead of the symmetrised value.
    #[arg(long)]
    pub directed_kl: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CorrelateArgs {
    /// Correlate with performance drops (delta) or raw performance.
    #[arg(long, default_value = "delta")]
    pub mode: DropMode,
    #[arg(long)]
    pub include_diagonal: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic drift family and its manifest.
    Synth {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        shift: f64,
        #[arg(long, default_value_t = 4.0)]
        separation: f64,
        #[arg(long, default_value_t = 20.0)]
        base_offset: f64,
    },
    /// Fit a joint embedding and export coordinates.
    Embed {
        #[arg(long)]
        space: Space,
        #[command(flatten)]
        embed: EmbedArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Distance matrices for one metric (or `all`) in one space.
    Distance {
        /// Metric id or `all`.
        #[arg(long)]
        metric: String,
        #[arg(long, default_value = "raw")]
        space: Space,
        #[command(flatten)]
        options: MetricArgs,
        #[command(flatten)]
        embed: EmbedArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Train-on-i / test-on-j performance matrix of the linear compressor.
    Perf {
        #[arg(long)]
        latent: usize,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Correlate one distance matrix with one performance matrix.
    Correlate {
        /// Distance sidecar JSON written by `distance`.
        #[arg(long)]
        distance: PathBuf,
        /// Performance JSON written by `perf`.
        #[arg(long)]
        performance: PathBuf,
        #[command(flatten)]
        corr: CorrelateArgs,
    },
    /// Full study: P once, D per (metric, space), one table sorted by |r|.
    Report {
        /// Comma-separated metric ids or `all`.
        #[arg(long, default_value = "all")]
        metric: String,
        /// Comma-separated spaces.
        #[arg(long, default_value = "raw,umap")]
        space: String,
        #[arg(long, default_value_t = 8)]
        latent: usize,
        #[command(flatten)]
        options: MetricArgs,
        #[command(flatten)]
        embed: EmbedArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        corr: CorrelateArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{}", serde_json::json!({ "failures": failures }));
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            eprintln!("{}", serde_json::json!({ "failures": [{ "error": format!("{e:#}") }] }));
            ExitCode::from(2)
        }
    }
}
