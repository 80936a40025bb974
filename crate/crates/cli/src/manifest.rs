//! Run manifest: config snapshot digest, input digests, and per-stage
//! output records. `verify` re-checks every listed digest.

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub sha256: String,
    pub records: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageEntry {
    pub config_sha256: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, OutputRecord>,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub stages: BTreeMap<String, StageEntry>,
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).with_context(|| format!("digesting {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn config_digest(config: &crate::config::PipelineConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

impl RunManifest {
    pub fn load_or_default(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Self {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                stages: BTreeMap::new(),
            });
        }
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(MANIFEST_FILE);
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))
    }

    /// Digest of the config used by any previously recorded stage, if
    /// one exists (stages are always run under a single config).
    pub fn recorded_config(&self) -> Option<&str> {
        self.stages.values().next().map(|e| e.config_sha256.as_str())
    }

    /// Re-checks every output digest. Returns the list of mismatched or
    /// missing files, empty when everything verifies.
    pub fn verify(&self, out_dir: &Path) -> Vec<String> {
        let mut problems = Vec::new();
        for (stage, entry) in &self.stages {
            for (file, record) in &entry.outputs {
                let path = out_dir.join(file);
                match file_digest(&path) {
                    Ok(d) if d == record.sha256 => {}
                    Ok(_) => problems.push(format!("{stage}: {file} digest mismatch")),
                    Err(_) => problems.push(format!("{stage}: {file} missing")),
                }
            }
        }
        problems
    }
}

/// Collects outputs as they are written so the stage entry can be
/// recorded in one shot.
pub struct StageRecorder {
    pub out_dir: PathBuf,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, OutputRecord>,
    pub started: DateTime<Utc>,
}

impl StageRecorder {
    pub fn new(out_dir: &Path) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            started: Utc::now(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs
            .insert(display_name(path), file_digest(path)?);
        Ok(())
    }

    /// Writes bytes to `name` under the out dir and records the digest.
    pub fn write_output(&mut self, name: &str, bytes: &[u8], records: usize) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.insert(
            name.to_string(),
            OutputRecord {
                sha256: hex::encode(Sha256::digest(bytes)),
                records,
            },
        );
        Ok(path)
    }

    pub fn finish(
        self,
        manifest: &mut RunManifest,
        stage: &str,
        config_sha256: &str,
    ) {
        manifest.stages.insert(
            stage.to_string(),
            StageEntry {
                config_sha256: config_sha256.to_string(),
                inputs: self.inputs,
                outputs: self.outputs,
                started: self.started,
                finished: Utc::now(),
            },
        );
    }
}

fn display_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
