use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use dsim_core::data_io::formats::write_f32le;
use dsim_core::data_io::synth::generate_drift_family_with;
use dsim_core::data_io::{normalize, DriftFamilyConfig, FileFormat, Limits, ManifestEntry};
use dsim_core::distances::MetricOptions;
use dsim_core::embeddings::{fit_space, EmbeddingSpec};
use dsim_core::evaluation::{
    correlate, evaluate_performance_matrix, run_benchmark, BenchmarkSpec, CellFailure, CorrelationReport, ReportMeta,
};
use dsim_core::{Dataset, DistanceMatrix, Manifest, MetricId, MetricSpec, PerformanceMatrix, Space, TaskSpec};

use crate::output::{config_hash, write_json, write_sidecar, write_text};
use crate::{Cli, Command, DataArgs, EmbedArgs, MetricArgs};

/// Runs one subcommand; returns the cells that failed.
pub fn run(cli: &Cli) -> Result<Vec<CellFailure>> {
    let threads = cli
        .global
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .context("building the worker pool")?;
    match &cli.command {
        Command::Synth {
            k,
            n,
            m,
            shift,
            separation,
            base_offset,
        } => synth(cli, *k, *n, *m, *shift, *separation, *base_offset).map(|_| vec![]),
        Command::Embed { space, embed, data } => cmd_embed(cli, *space, embed, data).map(|_| vec![]),
        Command::Distance {
            metric,
            space,
            options,
            embed,
            data,
        } => cmd_distance(cli, metric, *space, options, embed, data),
        Command::Perf { latent, data } => cmd_perf(cli, *latent, data).map(|_| vec![]),
        Command::Correlate {
            distance,
            performance,
            corr,
        } => cmd_correlate(cli, distance, performance, corr).map(|_| vec![]),
        Command::Report {
            metric,
            space,
            latent,
            options,
            embed,
            data,
            corr,
        } => cmd_report(cli, metric, space, *latent, options, embed, data, corr),
    }
}

/// Everything that determines a command's outputs, hashed into sidecars.
#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'a str,
    manifest: Option<&'a Manifest>,
    seed: u64,
    max_points: Option<usize>,
    args: serde_json::Value,
}

fn hash_for(cli: &Cli, command: &str, manifest: Option<&Manifest>, args: serde_json::Value) -> Result<String> {
    config_hash(&RunConfig {
        command,
        manifest,
        seed: cli.global.seed,
        max_points: cli.global.max_points,
        args,
    })
}

fn load(cli: &Cli, data: &DataArgs) -> Result<(Manifest, Vec<Dataset>)> {
    let path = cli
        .global
        .manifest
        .as_ref()
        .context("--manifest is required for this command")?;
    let mut manifest = Manifest::read(path).with_context(|| format!("reading manifest {}", path.display()))?;
    if let Some(cap) = cli.global.max_points {
        if cap == 0 {
            bail!("--max-points must be >= 1");
        }
        manifest.limits.max_points = cap;
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let datasets = manifest.load_all(&base)?;
    let datasets = datasets
        .iter()
        .map(|d| normalize(d, data.normalization))
        .collect::<dsim_core::Result<Vec<_>>>()?;
    Ok((manifest, datasets))
}

fn synth(cli: &Cli, k: usize, n: usize, m: usize, shift: f64, separation: f64, base_offset: f64) -> Result<()> {
    if k < 2 {
        bail!("need at least 2 datasets (got --k {k})");
    }
    let mut cfg = DriftFamilyConfig::new(k, n, m, shift, cli.global.seed);
    cfg.separation = separation;
    cfg.base_offset = base_offset;
    let family = generate_drift_family_with(&cfg)?;
    let out = &cli.global.out;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut entries = Vec::new();
    for ds in &family {
        let file = PathBuf::from(format!("{}.f32le", ds.name));
        write_f32le(&out.join(&file), ds.view(), false)?;
        entries.push(ManifestEntry {
            name: ds.name.clone(),
            path: file,
            format: FileFormat::F32le,
            complex: false,
        });
    }
    let manifest = Manifest {
        entries,
        preprocess: None,
        limits: Limits {
            max_points: cli.global.max_points.unwrap_or(m.max(1)),
            seed: cli.global.seed,
        },
    };
    manifest.write(&out.join("manifest.json"))?;
    println!("wrote {} datasets and manifest.json to {}", family.len(), out.display());
    Ok(())
}

fn embedding_spec(embed: &EmbedArgs, space: Space, seed: u64) -> EmbeddingSpec {
    let mut spec = EmbeddingSpec::default();
    spec.pca_dim = embed.pca_dim;
    spec.umap.n_neighbors = embed.neighbors;
    spec.umap.min_dist = embed.min_dist;
    spec.umap.n_epochs = embed.epochs;
    spec.umap.metric = embed.knn_metric;
    spec.umap.seed = seed;
    spec.tsne.perplexity = embed.perplexity;
    spec.tsne.seed = seed;
    if let Some(d) = embed.dim {
        match space {
            Space::Pca => spec.pca_dim = d,
            Space::Tsne => spec.tsne.out_dim = d,
            _ => spec.umap.out_dim = d,
        }
    }
    spec
}

fn cmd_embed(cli: &Cli, space: Space, embed: &EmbedArgs, data: &DataArgs) -> Result<()> {
    if space == Space::Raw {
        bail!("embed needs a latent space (pca|umap|tsne|pca+umap)");
    }
    let (manifest, datasets) = load(cli, data)?;
    let spec = embedding_spec(embed, space, cli.global.seed);
    let hash = hash_for(cli, "embed", Some(&manifest), serde_json::json!({ "space": space, "spec": spec, "normalization": data.normalization }))?;
    let model = fit_space(&datasets, space, &spec)
        .with_context(|| format!("fitting the {space} embedding"))?
        .expect("latent space");
    let stem = format!("embed_{}", space.as_str().replace('+', "_"));
    let out = &cli.global.out;
    std::fs::create_dir_all(out)?;
    model.write_coords_csv(&out.join(format!("{stem}.csv")))?;
    #[derive(Serialize)]
    struct Meta<'a> {
        space: Space,
        spec: &'a EmbeddingSpec,
        out_dim: usize,
        ranges: &'a [dsim_core::embeddings::DatasetRange],
        curve_ab: Option<(f64, f64)>,
        explained_variance: Option<Vec<f64>>,
    }
    let meta = Meta {
        space,
        spec: &spec,
        out_dim: model.out_dim(),
        ranges: &model.ranges,
        curve_ab: model.umap.as_ref().map(|u| (u.a, u.b)),
        explained_variance: model.pca.as_ref().map(|p| p.explained_variance.to_vec()),
    };
    write_sidecar(&out.join(format!("{stem}.json")), &hash, cli.global.seed, &meta)?;
    println!("wrote {stem}.csv ({} points, {} dims)", model.coords.nrows(), model.out_dim());
    Ok(())
}

fn parse_metrics(list: &str, options: &MetricArgs, max_points: usize) -> Result<Vec<MetricSpec>> {
    let ids: Vec<MetricId> = if list == "all" {
        MetricId::ALL.to_vec()
    } else {
        list.split(',').map(|s| s.trim().parse::<MetricId>()).collect::<dsim_core::Result<_>>()?
    };
    let opts = MetricOptions {
        k: options.clusters,
        bins: options.bins,
        rank: options.rank,
        max_points,
        directed_kl: options.directed_kl,
        ..MetricOptions::default()
    };
    ids.into_iter()
        .map(|id| {
            let spec = MetricSpec {
                id,
                options: opts.clone(),
            };
            spec.validate().with_context(|| format!("metric `{id}`"))?;
            Ok(spec)
        })
        .collect()
}

fn parse_spaces(list: &str) -> Result<Vec<Space>> {
    Ok(list.split(',').map(|s| s.trim().parse::<Space>()).collect::<dsim_core::Result<_>>()?)
}

fn distance_stem(metric: MetricId, space: Space) -> String {
    format!("distance_{}_{}", metric, space.as_str().replace('+', "_"))
}

fn write_distance(out: &Path, d: &DistanceMatrix) -> Result<()> {
    let stem = distance_stem(d.metric.id, d.space);
    write_text(&out.join(format!("{stem}.csv")), &d.to_csv())?;
    d.write_sidecar(&out.join(format!("{stem}.json")))?;
    Ok(())
}

fn cmd_distance(
    cli: &Cli,
    metric: &str,
    space: Space,
    options: &MetricArgs,
    embed: &EmbedArgs,
    data: &DataArgs,
) -> Result<Vec<CellFailure>> {
    let (manifest, datasets) = load(cli, data)?;
    let metrics = parse_metrics(metric, options, manifest.limits.max_points)?;
    let spec = embedding_spec(embed, space, cli.global.seed);
    let model = fit_space(&datasets, space, &spec).with_context(|| format!("fitting the {space} embedding"))?;
    let out = &cli.global.out;
    let mut failures = Vec::new();
    for m in &metrics {
        let hash = hash_for(
            cli,
            "distance",
            Some(&manifest),
            serde_json::json!({ "metric": m, "space": space, "embedding": spec, "normalization": data.normalization }),
        )?;
        match dsim_core::distance_matrix(&datasets, m, space, model.as_ref(), cli.global.seed) {
            Ok(mut d) => {
                d.config_hash = Some(hash);
                write_distance(out, &d)?;
            }
            Err(e) => {
                eprintln!("{} in {space}: {e}", m.id);
                failures.push(CellFailure {
                    metric: Some(m.id),
                    space,
                    error: e.to_string(),
                });
            }
        }
    }
    if !failures.is_empty() {
        write_json(&out.join("failures.json"), &failures)?;
    }
    println!("wrote {} distance matrices to {}", metrics.len() - failures.len(), out.display());
    Ok(failures)
}

fn write_performance(out: &Path, p: &PerformanceMatrix, hash: &str, seed: u64) -> Result<()> {
    write_text(&out.join("performance.csv"), &p.to_csv())?;
    write_text(&out.join("performance_drop.csv"), &p.drop_csv())?;
    write_sidecar(&out.join("performance.json"), hash, seed, p)
}

fn cmd_perf(cli: &Cli, latent: usize, data: &DataArgs) -> Result<()> {
    let (manifest, datasets) = load(cli, data)?;
    // datasets are already normalised by `load`
    let task = TaskSpec {
        latent_dim: latent,
        normalization: data.normalization,
        seed: cli.global.seed,
    };
    let hash = hash_for(cli, "perf", Some(&manifest), serde_json::json!({ "task": task }))?;
    let p = evaluate_performance_matrix(&datasets, &task)?;
    write_performance(&cli.global.out, &p, &hash, cli.global.seed)?;
    println!("wrote {k}x{k} performance matrix", k = p.labels.len());
    Ok(())
}

fn read_performance(path: &Path) -> Result<PerformanceMatrix> {
    PerformanceMatrix::read_json(path).with_context(|| format!("reading performance matrix {}", path.display()))
}

fn write_report(out: &Path, report: &CorrelationReport, hash: &str, seed: u64, stem: &str) -> Result<()> {
    write_sidecar(&out.join(format!("{stem}.json")), hash, seed, report)?;
    write_json(&out.join(format!("{stem}_timing.json")), &report.timing())?;
    write_text(&out.join(format!("{stem}.txt")), &report.to_table())
}

fn cmd_correlate(cli: &Cli, distance: &Path, performance: &Path, corr: &crate::CorrelateArgs) -> Result<()> {
    let d = DistanceMatrix::read_sidecar(distance).with_context(|| format!("reading distance matrix {}", distance.display()))?;
    let p = read_performance(performance)?;
    let row = correlate(&d, &p, corr.mode, corr.include_diagonal)?;
    let report = CorrelationReport::new(
        vec![row],
        vec![],
        ReportMeta {
            seed: d.seed,
            datasets: d.labels.clone(),
            task: Some(p.task.clone()),
        },
    );
    let hash = hash_for(
        cli,
        "correlate",
        None,
        serde_json::json!({ "distance": d.config_hash, "performance": p.task, "mode": corr.mode, "diag": corr.include_diagonal }),
    )?;
    write_report(&cli.global.out, &report, &hash, cli.global.seed, "correlation")?;
    print!("{}", report.to_table());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_report(
    cli: &Cli,
    metric: &str,
    space: &str,
    latent: usize,
    options: &MetricArgs,
    embed: &EmbedArgs,
    data: &DataArgs,
    corr: &crate::CorrelateArgs,
) -> Result<Vec<CellFailure>> {
    let (manifest, datasets) = load(cli, data)?;
    let metrics = parse_metrics(metric, options, manifest.limits.max_points)?;
    let spaces = parse_spaces(space)?;
    let seed = cli.global.seed;
    let task = TaskSpec {
        latent_dim: latent,
        normalization: data.normalization,
        seed,
    };
    let mut spec = BenchmarkSpec::new(task, seed);
    spec.mode = corr.mode;
    spec.include_diagonal = corr.include_diagonal;
    // spaces with a --dim override share one parameter set
    spec.embedding = embedding_spec(embed, Space::Umap, seed);
    if let Some(d) = embed.dim {
        spec.embedding.tsne.out_dim = d;
    }
    let hash = hash_for(
        cli,
        "report",
        Some(&manifest),
        serde_json::json!({ "metrics": metrics, "spaces": spaces, "spec": spec }),
    )?;
    let out_dir = &cli.global.out;
    let mut result = run_benchmark(&datasets, &metrics, &spaces, &spec)?;
    write_performance(out_dir, &result.performance, &hash, seed)?;
    for d in &mut result.distances {
        d.config_hash = Some(hash.clone());
        write_distance(out_dir, d)?;
    }
    write_report(out_dir, &result.report, &hash, seed, "report")?;
    print!("{}", result.report.to_table());
    Ok(result.report.failures.clone())
}
