//! Stage orchestration: each stage reads only files produced by earlier
//! stages (never in-process state), writes its outputs under the out
//! directory, and records them in the run manifest. Re-running a stage
//! with unchanged inputs and config produces byte-identical outputs.

mod agree;
mod analyze;
mod extract;
mod ingest;
mod report;
mod score;
mod survey;
mod train;

use crate::config::PipelineConfig;
use crate::manifest::{config_digest, RunManifest, StageRecorder};
use chrono::{DateTime, Utc};
use expect_core::corpus::{Platform, RemovedCounts};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Stage {
    Ingest,
    Extract,
    Survey,
    Train,
    Score,
    Agree,
    Analyze,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Extract,
        Stage::Survey,
        Stage::Train,
        Stage::Score,
        Stage::Agree,
        Stage::Analyze,
        Stage::Report,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Survey => "survey",
            Stage::Train => "train",
            Stage::Score => "score",
            Stage::Agree => "agree",
            Stage::Analyze => "analyze",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Stage failure, carrying the process exit code contract:
/// 2 config error, 3 missing dependency stage, 4 provider unavailable,
/// 5 validation failure.
#[derive(Debug)]
pub enum StageError {
    Config(String),
    MissingDependency { artifact: String, stage: &'static str },
    ProviderUnavailable(String),
    Validation(String),
    Io(anyhow::Error),
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageError::Config(m) => write!(f, "config error: {m}"),
            StageError::MissingDependency { artifact, stage } => {
                write!(f, "missing {artifact}: requires stage: {stage}")
            }
            StageError::ProviderUnavailable(m) => write!(f, "provider unavailable: {m}"),
            StageError::Validation(m) => write!(f, "validation failure: {m}"),
            StageError::Io(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for StageError {}

impl From<anyhow::Error> for StageError {
    fn from(e: anyhow::Error) -> Self {
        StageError::Io(e)
    }
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        match self {
            StageError::Config(_) => 2,
            StageError::MissingDependency { .. } => 3,
            StageError::ProviderUnavailable(_) => 4,
            StageError::Validation(_) => 5,
            StageError::Io(_) => 1,
        }
    }
}

/// Artifact file names, with the stage that produces each.
pub mod artifacts {
    pub const POSTS_CLEAN: &str = "posts_clean.jsonl";
    pub const REJECTIONS: &str = "rejections.csv";
    pub const DEDUP_LOG: &str = "dedup_log.csv";
    pub const EXTRACTIONS: &str = "extractions.jsonl";
    pub const TOPK: &str = "topk.csv";
    pub const REVIEW_MANIFEST: &str = "review_manifest.csv";
    pub const REVIEW_FILLED: &str = "review_manifest_filled.csv";
    pub const EXTRACT_FAILURES: &str = "extract_failures.csv";
    pub const RELIABILITY: &str = "reliability.json";
    pub const ITEM_SCORES: &str = "item_scores.csv";
    pub const SURVEY_REJECTIONS: &str = "survey_rejections.csv";
    pub const SPLITS: &str = "splits.json";
    pub const CHECKPOINT: &str = "checkpoint.json";
    pub const TRAINING_LOG: &str = "training_log.csv";
    pub const SCORES: &str = "scores.csv";
    pub const AGREEMENT: &str = "agreement.json";
    pub const BA_PAIRS: &str = "ba_pairs.csv";
    pub const BA_LINES: &str = "ba_lines.csv";
    pub const OLS: &str = "ols.csv";
    pub const IMPORTANCES: &str = "importances.csv";
    pub const SHAP_MATRIX: &str = "shap_matrix.csv";
    pub const ANALYSIS: &str = "analysis.json";
    pub const REPORT_MD: &str = "report.md";
    pub const FIG2_SHARES: &str = "fig2_category_shares.csv";

    pub fn producer(artifact: &str) -> &'static str {
        match artifact {
            POSTS_CLEAN | REJECTIONS | DEDUP_LOG => "ingest",
            EXTRACTIONS | TOPK | REVIEW_MANIFEST | EXTRACT_FAILURES => "extract",
            RELIABILITY | ITEM_SCORES | SURVEY_REJECTIONS => "survey",
            SPLITS | CHECKPOINT | TRAINING_LOG => "train",
            SCORES => "score",
            AGREEMENT | BA_PAIRS | BA_LINES => "agree",
            OLS | IMPORTANCES | SHAP_MATRIX | ANALYSIS => "analyze",
            REPORT_MD | FIG2_SHARES => "report",
            _ => "unknown",
        }
    }
}

/// One post flowing between stages: cleaned text plus the raw metadata
/// later stages need (likes for the design matrix, timestamps for
/// provenance).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelinePost {
    pub id: String,
    pub platform: Platform,
    pub text_clean: String,
    pub likes: u64,
    pub comments: u64,
    pub timestamp: DateTime<Utc>,
    pub removed: RemovedCounts,
    pub normalizations_applied: Vec<String>,
}

impl PipelinePost {
    pub fn clean_post(&self) -> expect_core::corpus::CleanPost {
        expect_core::corpus::CleanPost {
            id: self.id.clone(),
            text_clean: self.text_clean.clone(),
            removed: self.removed,
            normalizations_applied: self.normalizations_applied.clone(),
        }
    }
}

/// Opens an upstream artifact, mapping absence to the exit-3 error that
/// names the producing stage.
pub fn require_artifact(out_dir: &Path, name: &str) -> Result<PathBuf, StageError> {
    let path = out_dir.join(name);
    if !path.exists() {
        return Err(StageError::MissingDependency {
            artifact: name.to_string(),
            stage: artifacts::producer(name),
        });
    }
    Ok(path)
}

pub fn read_pipeline_posts(path: &Path) -> Result<Vec<PipelinePost>, StageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| StageError::Io(anyhow::anyhow!("reading {}: {e}", path.display())))?;
    let mut posts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        posts.push(serde_json::from_str(line).map_err(|e| {
            StageError::Validation(format!("{} line {}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(posts)
}

/// Runs one stage under the shared manifest, enforcing the
/// config-mismatch guard.
pub fn run_stage(
    stage: Stage,
    cfg: &PipelineConfig,
    force: bool,
) -> Result<Vec<String>, StageError> {
    let out_dir = &cfg.paths.out_dir;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| StageError::Config(format!("out_dir {}: {e}", out_dir.display())))?;

    let mut manifest = RunManifest::load_or_default(out_dir)?;
    let cfg_digest = config_digest(cfg);
    if let Some(recorded) = manifest.recorded_config() {
        if recorded != cfg_digest && !force {
            return Err(StageError::Config(format!(
                "out_dir was produced with a different config ({} != {}); \
                 rerun with --force to override",
                &recorded[..12.min(recorded.len())],
                &cfg_digest[..12]
            )));
        }
    }

    let mut recorder = StageRecorder::new(out_dir);
    let outcome = match stage {
        Stage::Ingest => ingest::run(cfg, &mut recorder),
        Stage::Extract => extract::run(cfg, &mut recorder),
        Stage::Survey => survey::run(cfg, &mut recorder),
        Stage::Train => train::run(cfg, &mut recorder),
        Stage::Score => score::run(cfg, &mut recorder),
        Stage::Agree => agree::run(cfg, &mut recorder),
        Stage::Analyze => analyze::run(cfg, &mut recorder),
        Stage::Report => report::run(cfg, &mut recorder),
    };

    match outcome {
        Ok(summary) => {
            recorder.finish(&mut manifest, stage.name(), &cfg_digest);
            manifest.save(out_dir)?;
            Ok(summary)
        }
        // A partial report still records its outputs before surfacing
        // the validation exit code.
        Err(StageError::Validation(msg)) if stage == Stage::Report => {
            recorder.finish(&mut manifest, stage.name(), &cfg_digest);
            manifest.save(out_dir)?;
            Err(StageError::Validation(msg))
        }
        Err(e) => Err(e),
    }
}

/// Serializes records as JSON Lines bytes.
pub fn jsonl_bytes<T: Serialize>(records: &[T]) -> Result<Vec<u8>, StageError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)
            .map_err(|e| StageError::Io(anyhow::anyhow!("serializing jsonl: {e}")))?;
        out.push(b'\n');
    }
    Ok(out)
}

/// Serializes one value as pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, StageError> {
    let mut json = serde_json::to_string_pretty(value)
        .map_err(|e| StageError::Io(anyhow::anyhow!("serializing json: {e}")))?;
    json.push('\n');
    Ok(json.into_bytes())
}
