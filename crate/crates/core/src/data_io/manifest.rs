//! JSON manifests describing which files form a comparison run.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::formats::{read_raw, FileFormat};
use super::{channel_to_features, check_same_dim, normalize, subsample, ChannelTensor, Dataset, Normalization};
use crate::error::{Error, Result};
use crate::numerics::rng::{derive_seed, str_hash};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub path: PathBuf,
    pub format: FileFormat,
    #[serde(default)]
    pub complex: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPreprocess {
    /// Delay taps to keep; `None` skips the delay-domain transform.
    #[serde(default)]
    pub n_taps: Option<usize>,
    #[serde(default)]
    pub normalization: Normalization,
    /// Antennas per sample; defaults to the second axis of 3-D NPY files.
    #[serde(default)]
    pub n_antennas: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub max_points: usize,
    pub seed: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_points: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    #[serde(default)]
    pub preprocess: Option<ChannelPreprocess>,
    #[serde(default)]
    pub limits: Limits,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::param("entries", "manifest lists no datasets"));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::param("entries", format!("duplicate dataset name `{}`", e.name)));
            }
        }
        if self.limits.max_points == 0 {
            return Err(Error::param("max_points", "must be >= 1"));
        }
        Ok(())
    }

    /// Loads, preprocesses and subsamples every entry. Relative paths are
    /// resolved against `base_dir`.
    pub fn load_all(&self, base_dir: &Path) -> Result<Vec<Dataset>> {
        self.validate()?;
        let out = self
            .entries
            .iter()
            .map(|e| {
                let ds = load_entry(e, base_dir, self.preprocess.as_ref())?;
                let seed = derive_seed(self.limits.seed, &[str_hash(&e.name)]);
                subsample(&ds, self.limits.max_points, seed)
            })
            .collect::<Result<Vec<_>>>()?;
        check_same_dim(&out)?;
        Ok(out)
    }
}

fn resolve(entry: &ManifestEntry, base_dir: &Path) -> PathBuf {
    if entry.path.is_absolute() {
        entry.path.clone()
    } else {
        base_dir.join(&entry.path)
    }
}

/// Reads one manifest entry into a dataset. Complex files become `2N`
/// interleaved real features.
pub fn load_dataset(entry: &ManifestEntry, base_dir: &Path) -> Result<Dataset> {
    let path = resolve(entry, base_dir);
    let raw = read_raw(&path, entry.format, entry.complex)?;
    let points = raw.into_matrix()?;
    Dataset::new(entry.name.clone(), points, path.display().to_string())
}

fn load_entry(entry: &ManifestEntry, base_dir: &Path, pre: Option<&ChannelPreprocess>) -> Result<Dataset> {
    let Some(pre) = pre else {
        return load_dataset(entry, base_dir);
    };
    let path = resolve(entry, base_dir);
    let raw = read_raw(&path, entry.format, entry.complex)?;
    let row_shape = raw.row_shape.clone();
    let ds = Dataset::new(entry.name.clone(), raw.into_matrix()?, path.display().to_string())?;
    let ds = match pre.n_taps {
        Some(n_taps) => {
            if !entry.complex {
                return Err(Error::param(
                    "n_taps",
                    format!("delay-tap preprocessing needs complex input; `{}` is real", entry.name),
                ));
            }
            let n_antennas = match (pre.n_antennas, row_shape.as_slice()) {
                (Some(a), _) => a,
                (None, [a, _]) => *a,
                (None, _) => 1,
            };
            let ch = ChannelTensor::from_interleaved(&ds, n_antennas)?;
            let mut feats = channel_to_features(&ch, n_taps, &ds.name, &ds.source)?;
            feats.preprocessing.splice(0..0, ds.preprocessing.iter().cloned());
            feats
        }
        None => ds,
    };
    normalize(&ds, pre.normalization)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_names() {
        let text = r#"{
            "entries": [{"name": "a", "path": "a.csv", "format": "csv", "complex": false}],
            "preprocess": {"n_taps": 16, "normalization": "per-sample-unit-norm"},
            "limits": {"max_points": 100, "seed": 3}
        }"#;
        let m = Manifest::from_json(text).unwrap();
        assert_eq!(m.entries[0].format, FileFormat::Csv);
        assert_eq!(m.preprocess.as_ref().unwrap().n_taps, Some(16));
        assert_eq!(m.limits.max_points, 100);
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = r#"{"entries": [
            {"name": "a", "path": "a.csv", "format": "csv"},
            {"name": "a", "path": "b.csv", "format": "csv"}]}"#;
        assert!(Manifest::from_json(text).is_err());
    }

    #[test]
    fn missing_file_reports_path() {
        let e = ManifestEntry {
            name: "x".into(),
            path: "does/not/exist.csv".into(),
            format: FileFormat::Csv,
            complex: false,
        };
        let err = load_dataset(&e, Path::new("/nonexistent")).unwrap_err();
        assert!(err.to_string().contains("exist.csv"));
    }
}
