//! Datasets, file ingestion, channel preprocessing and synthetic families.

mod channel;
mod dataset;
pub mod formats;
mod manifest;
mod preprocess;
pub mod synth;

pub use channel::channel_to_features;
pub use dataset::{check_same_dim, ChannelTensor, Dataset};
pub use formats::FileFormat;
pub use manifest::{load_dataset, ChannelPreprocess, Limits, Manifest, ManifestEntry};
pub use preprocess::{normalize, subsample, subsample_indices, Normalization};
pub use synth::{generate_drift_family, generate_drift_family_with, DriftFamilyConfig};
