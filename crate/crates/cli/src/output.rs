use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Short SHA-256 of the canonical JSON of a run configuration.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&json);
    Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
}

#[derive(Serialize)]
pub struct Sidecar<'a, T: Serialize> {
    pub config_hash: &'a str,
    pub seed: u64,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_sidecar<T: Serialize>(path: &Path, hash: &str, seed: u64, body: &T) -> Result<()> {
    write_json(
        path,
        &Sidecar {
            config_hash: hash,
            seed,
            body,
        },
    )
}
