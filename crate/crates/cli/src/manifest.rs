//! Run manifest written next to every command's outputs.

use std::path::{Path, PathBuf};

use memchaos_core::io::{sha256_hex, write_json};
use memchaos_core::Error;
use serde::Serialize;

use crate::config::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema_version: u32,
    pub command: &'a str,
    pub version: &'a str,
    pub config_sha256: String,
    pub seed: u64,
    pub config: &'a ExperimentConfig,
    pub inputs: Vec<OutputEntry>,
    pub outputs: Vec<OutputEntry>,
}

/// Canonical hash of the effective configuration (after the seed override).
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(&serde_json::to_vec(cfg).expect("config serializes"))
}

fn entry(dir: &Path, path: &Path) -> Result<OutputEntry, Error> {
    let bytes = std::fs::read(path)?;
    let file = path.strip_prefix(dir).unwrap_or(path).to_string_lossy().into_owned();
    Ok(OutputEntry {
        file,
        sha256: sha256_hex(&bytes),
    })
}

fn input_entry(path: &Path) -> Result<OutputEntry, Error> {
    let bytes = std::fs::read(path)?;
    let file = path
        .file_name()
        .unwrap_or(path.as_os_str())
        .to_string_lossy()
        .into_owned();
    Ok(OutputEntry {
        file,
        sha256: sha256_hex(&bytes),
    })
}

/// Hashes `outputs` (paths inside `dir`) and writes the manifest there.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<PathBuf, Error> {
    let m = Manifest {
        schema_version: SCHEMA_VERSION,
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: config_hash(cfg),
        seed: cfg.effective_seed(),
        config: cfg,
        inputs: inputs.iter().map(|p| input_entry(p)).collect::<Result<_, _>>()?,
        outputs: outputs.iter().map(|p| entry(dir, p)).collect::<Result<_, _>>()?,
    };
    let path = dir.join(MANIFEST_FILE);
    write_json(&path, &m)?;
    Ok(path)
}
