//! Pipeline configuration: one JSON file drives every stage. All
//! randomness flows from the seeds here; no stage reads system entropy.

use anyhow::{Context, Result};
use expect_core::corpus::NormalizationTables;
use expect_core::extraction::{MockLexicon, SynonymTable};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const DEFAULT_TABLES_JSON: &str = include_str!("../assets/tables.json");
pub const DEFAULT_LEXICON_JSON: &str = include_str!("../assets/mock_lexicon.json");
pub const DEFAULT_SYNONYMS_JSON: &str = include_str!("../assets/synonyms.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Paths {
    pub corpus: PathBuf,
    pub responses: PathBuf,
    pub out_dir: PathBuf,
    /// Normalization tables; bundled defaults when omitted.
    #[serde(default)]
    pub tables: Option<PathBuf>,
    /// Mock-provider / feature lexicon; bundled defaults when omitted.
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    /// Raw-label synonym table; bundled defaults when omitted.
    #[serde(default)]
    pub synonyms: Option<PathBuf>,
    /// Optional expert override CSV applied after aggregation.
    #[serde(default)]
    pub overrides: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinhashCfg {
    pub k: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for MinhashCfg {
    fn default() -> Self {
        Self {
            k: 128,
            threshold: 0.85,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderCfg {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub mock: bool,
    #[serde(default)]
    pub request_seed: Option<u64>,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_in_flight")]
    pub in_flight: usize,
}

fn default_max_retries() -> u32 {
    2
}
fn default_timeout_secs() -> u64 {
    30
}
fn default_in_flight() -> usize {
    4
}

impl Default for ProviderCfg {
    fn default() -> Self {
        Self {
            endpoint: "http://localhost:0/v1/complete".into(),
            model: "expectation-extractor".into(),
            temperature: 0.0,
            mock: true,
            request_seed: None,
            max_retries: default_max_retries(),
            timeout_secs: default_timeout_secs(),
            in_flight: default_in_flight(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurveyCfg {
    pub time_floor: f64,
    pub ttr_floor: f64,
    pub min_raters: usize,
    #[serde(default = "default_attention_floor")]
    pub attention_pass_floor: f64,
}

fn default_attention_floor() -> f64 {
    1.0
}

impl Default for SurveyCfg {
    fn default() -> Self {
        Self {
            time_floor: 2.0,
            ttr_floor: 0.30,
            min_raters: 3,
            attention_pass_floor: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScorerCfg {
    pub lr: f64,
    pub epochs: u64,
    pub seed: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_warmup")]
    pub warmup_steps: u64,
    #[serde(default = "default_bow_buckets")]
    pub bow_buckets: usize,
    /// Fractions of labeled posts assigned to train and validation; the
    /// remainder is the holdout.
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    #[serde(default = "default_runs")]
    pub runs: usize,
}

fn default_batch_size() -> usize {
    32
}
fn default_warmup() -> u64 {
    500
}
fn default_bow_buckets() -> usize {
    256
}
fn default_train_fraction() -> f64 {
    0.6
}
fn default_val_fraction() -> f64 {
    0.25
}
fn default_runs() -> usize {
    10
}

impl Default for ScorerCfg {
    fn default() -> Self {
        Self {
            lr: 0.01,
            epochs: 200,
            seed: 2,
            batch_size: default_batch_size(),
            warmup_steps: default_warmup(),
            bow_buckets: default_bow_buckets(),
            train_fraction: default_train_fraction(),
            val_fraction: default_val_fraction(),
            runs: default_runs(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisCfg {
    pub scale: f64,
    pub n_trees: usize,
    pub max_depth: usize,
    pub shap_background: usize,
    pub seed: u64,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
}

fn default_min_leaf() -> usize {
    5
}
fn default_grid_size() -> usize {
    20
}

impl Default for AnalysisCfg {
    fn default() -> Self {
        Self {
            scale: 100.0,
            n_trees: 200,
            max_depth: 8,
            shap_background: 100,
            seed: 3,
            min_leaf: default_min_leaf(),
            grid_size: default_grid_size(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub paths: Paths,
    #[serde(default)]
    pub minhash: MinhashCfg,
    #[serde(default)]
    pub provider: ProviderCfg,
    #[serde(default)]
    pub survey: SurveyCfg,
    #[serde(default)]
    pub scorer: ScorerCfg,
    #[serde(default)]
    pub analysis: AnalysisCfg,
    #[serde(default = "default_topk")]
    pub topk: usize,
}

fn default_topk() -> usize {
    5
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: PipelineConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        anyhow::ensure!(self.minhash.k >= 1, "minhash.k must be >= 1");
        anyhow::ensure!(
            self.minhash.threshold > 0.0 && self.minhash.threshold <= 1.0,
            "minhash.threshold must be in (0, 1]"
        );
        anyhow::ensure!(self.scorer.lr > 0.0, "scorer.lr must be positive");
        anyhow::ensure!(self.analysis.scale > 0.0, "analysis.scale must be positive");
        anyhow::ensure!(self.topk >= 1, "topk must be >= 1");
        anyhow::ensure!(
            self.scorer.train_fraction >= 0.0
                && self.scorer.val_fraction >= 0.0
                && self.scorer.train_fraction + self.scorer.val_fraction <= 1.0,
            "scorer train/val fractions must be non-negative and sum to <= 1"
        );
        Ok(())
    }

    /// Applies the `--seed` override: one master seed replacing every
    /// stage seed.
    pub fn override_seed(&mut self, seed: u64) {
        self.minhash.seed = seed;
        self.scorer.seed = seed;
        self.analysis.seed = seed;
    }

    pub fn tables(&self) -> Result<NormalizationTables> {
        let json = match &self.paths.tables {
            Some(p) => std::fs::read_to_string(p)
                .with_context(|| format!("reading tables {}", p.display()))?,
            None => DEFAULT_TABLES_JSON.to_string(),
        };
        NormalizationTables::from_json(&json).map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn lexicon(&self) -> Result<MockLexicon> {
        let json = match &self.paths.lexicon {
            Some(p) => std::fs::read_to_string(p)
                .with_context(|| format!("reading lexicon {}", p.display()))?,
            None => DEFAULT_LEXICON_JSON.to_string(),
        };
        MockLexicon::from_json(&json).context("parsing lexicon")
    }

    pub fn synonyms(&self) -> Result<SynonymTable> {
        let json = match &self.paths.synonyms {
            Some(p) => std::fs::read_to_string(p)
                .with_context(|| format!("reading synonyms {}", p.display()))?,
            None => DEFAULT_SYNONYMS_JSON.to_string(),
        };
        SynonymTable::from_json(&json).context("parsing synonyms")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let json = r#"{
            "paths": {"corpus": "c.jsonl", "responses": "r.csv", "out_dir": "out"}
        }"#;
        let cfg: PipelineConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.minhash.k, 128);
        assert_eq!(cfg.topk, 5);
        assert!(cfg.provider.mock);
        assert_eq!(cfg.scorer.runs, 10);
    }

    #[test]
    fn bundled_defaults_parse() {
        let cfg: PipelineConfig = serde_json::from_str(
            r#"{"paths": {"corpus": "c", "responses": "r", "out_dir": "o"}}"#,
        )
        .unwrap();
        cfg.tables().unwrap();
        let lex = cfg.lexicon().unwrap();
        assert!(!lex.entries.is_empty());
        let syn = cfg.synonyms().unwrap();
        assert!(!syn.map.is_empty());
    }

    #[test]
    fn bad_threshold_is_rejected() {
        let json = r#"{
            "paths": {"corpus": "c", "responses": "r", "out_dir": "o"},
            "minhash": {"k": 128, "threshold": 1.5, "seed": 1}
        }"#;
        let cfg: PipelineConfig = serde_json::from_str(json).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn seed_override_touches_every_stage_seed() {
        let mut cfg: PipelineConfig = serde_json::from_str(
            r#"{"paths": {"corpus": "c", "responses": "r", "out_dir": "o"}}"#,
        )
        .unwrap();
        cfg.override_seed(99);
        assert_eq!(cfg.minhash.seed, 99);
        assert_eq!(cfg.scorer.seed, 99);
        assert_eq!(cfg.analysis.seed, 99);
    }
}
