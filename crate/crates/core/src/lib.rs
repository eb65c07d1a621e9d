//! Dataset similarity evaluation.
//!
//! Computes distances between feature datasets, in raw space or in a jointly
//! fitted latent space (PCA, UMAP, exact t-SNE), measures how a compression
//! model trained on one dataset performs on the others, and reports how well
//! each distance predicts that performance drop (Pearson correlation).

pub mod data_io;
pub mod distances;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod numerics;

pub use data_io::{Dataset, Manifest, Normalization};
pub use distances::{distance_matrix, DistanceMatrix, MetricId, MetricSpec};
pub use embeddings::{EmbeddingKind, EmbeddingModel, Space, UmapParams};
pub use error::{Error, Result};
pub use evaluation::{CorrelationReport, DropMode, PerformanceMatrix, TaskSpec};
