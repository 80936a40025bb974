//! Scoring paths: the trained surrogate, the remote provider, repeated
//! evaluation with derived per-run seeds, and checkpoint files.

use super::{
    clamp_score, featurize, FeatureSpace, ScoreRecord, ScoreSourceKind, ScorerError, ScorerParams,
};
use crate::corpus::CleanPost;
use crate::extraction::{
    with_retries, ExpectationCategory, MockLexicon, Provider, ProviderConfig, ProviderError,
    ProviderRequest,
};
use crate::hash::derive_seed_indexed;
use serde::{Deserialize, Serialize};

/// Anything that can produce one intensity score for a (post, category)
/// pair. `seed` lets stochastic sources vary per run; the surrogate
/// ignores it.
pub trait ScoreSource {
    fn score_once(
        &self,
        post: &CleanPost,
        category: &ExpectationCategory,
        run_index: usize,
        seed: u64,
    ) -> Result<ScoreRecord, ScorerError>;
}

/// The locally trained linear surrogate.
#[derive(Debug)]
pub struct SurrogateScorer<'a> {
    pub params: &'a ScorerParams,
    pub space: &'a FeatureSpace,
    pub lexicon: &'a MockLexicon,
}

impl SurrogateScorer<'_> {
    /// Raw (unclamped) prediction for one category.
    pub fn raw_score(&self, post: &CleanPost, category: &ExpectationCategory) -> Result<f64, ScorerError> {
        let idx = ScorerParams::index_of(category)?;
        let x = featurize(post, self.lexicon, self.space);
        Ok(self
            .params
            .weights(idx)
            .iter()
            .zip(&x)
            .map(|(w, v)| w * v)
            .sum())
    }

    /// Names the top-3 features by absolute contribution.
    fn rationale(&self, post: &CleanPost, category: &ExpectationCategory) -> Result<String, ScorerError> {
        let idx = ScorerParams::index_of(category)?;
        let x = featurize(post, self.lexicon, self.space);
        let mut contributions: Vec<(usize, f64)> = self
            .params
            .weights(idx)
            .iter()
            .zip(&x)
            .enumerate()
            .map(|(i, (w, v))| (i, w * v))
            .collect();
        contributions.sort_by(|a, b| {
            b.1.abs()
                .partial_cmp(&a.1.abs())
                .unwrap()
                .then(a.0.cmp(&b.0))
        });
        let top: Vec<String> = contributions
            .iter()
            .take(3)
            .map(|(i, c)| format!("{}={:+.3}", self.space.feature_name(*i), c))
            .collect();
        Ok(format!("top features: {}", top.join(", ")))
    }
}

impl ScoreSource for SurrogateScorer<'_> {
    fn score_once(
        &self,
        post: &CleanPost,
        category: &ExpectationCategory,
        run_index: usize,
        _seed: u64,
    ) -> Result<ScoreRecord, ScorerError> {
        let raw = self.raw_score(post, category)?;
        Ok(ScoreRecord {
            post_id: post.id.clone(),
            category: category.clone(),
            score: clamp_score(raw),
            rationale: self.rationale(post, category)?,
            source: ScoreSourceKind::Surrogate,
            run_index,
        })
    }
}

/// Remote scoring through the provider wire format. The reply `text` is
/// expected to contain a JSON object `{"score": n, "rationale": "..."}`.
pub struct RemoteScorer<'a> {
    pub provider: &'a dyn Provider,
    pub cfg: &'a ProviderConfig,
}

#[derive(Debug, Deserialize)]
struct RemoteScoreReply {
    score: f64,
    #[serde(default)]
    rationale: String,
}

impl ScoreSource for RemoteScorer<'_> {
    fn score_once(
        &self,
        post: &CleanPost,
        category: &ExpectationCategory,
        run_index: usize,
        seed: u64,
    ) -> Result<ScoreRecord, ScorerError> {
        let prompt = format!(
            "Given the social media text: \"\"\"{}\"\"\", assign intensity scores (1-7 scale) \
             for {} with explanatory rationale. Reply with a JSON object with keys \"score\" \
             and \"rationale\".",
            post.text_clean, category
        );
        let request = ProviderRequest {
            model: self.cfg.model_name.clone(),
            prompt,
            temperature: self.cfg.temperature,
            seed: Some(seed),
        };
        let reply = with_retries(self.cfg.max_retries, || {
            let reply = self.provider.complete(&request)?;
            let trimmed = reply.text.trim();
            let trimmed = trimmed
                .strip_prefix("```json")
                .or_else(|| trimmed.strip_prefix("```"))
                .unwrap_or(trimmed);
            let trimmed = trimmed.strip_suffix("```").unwrap_or(trimmed).trim();
            serde_json::from_str::<RemoteScoreReply>(trimmed)
                .map_err(|e| ProviderError::Malformed(e.to_string()))
        })
        .map_err(|e| ScorerError::Remote(e.to_string()))?;

        Ok(ScoreRecord {
            post_id: post.id.clone(),
            category: category.clone(),
            score: clamp_score(reply.score),
            rationale: reply.rationale,
            source: ScoreSourceKind::Remote,
            run_index,
        })
    }
}

/// Scores one (post, category) pair once (run 0).
pub fn score(
    source: &dyn ScoreSource,
    post: &CleanPost,
    category: &ExpectationCategory,
    base_seed: u64,
) -> Result<ScoreRecord, ScorerError> {
    source.score_once(post, category, 0, run_seed(base_seed, &post.id, 0))
}

fn run_seed(base_seed: u64, post_id: &str, run_index: usize) -> u64 {
    derive_seed_indexed(base_seed, &format!("score:{post_id}"), run_index as u64)
}

/// Mean record over repeated runs, plus how many runs actually succeeded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepeatedScore {
    pub record: ScoreRecord,
    pub runs_requested: usize,
    pub runs_used: usize,
    pub partial: bool,
}

/// Scores a pair `runs` times with per-run derived seeds and averages.
/// Failed runs are skipped and the result marked partial; if every run
/// fails the last error is returned.
pub fn repeated_score(
    source: &dyn ScoreSource,
    post: &CleanPost,
    category: &ExpectationCategory,
    runs: usize,
    base_seed: u64,
) -> Result<RepeatedScore, ScorerError> {
    assert!(runs >= 1, "runs must be >= 1");
    let mut records = Vec::new();
    let mut last_err = None;
    for run in 0..runs {
        match source.score_once(post, category, run, run_seed(base_seed, &post.id, run)) {
            Ok(r) => records.push(r),
            Err(e) => last_err = Some(e),
        }
    }
    let Some(first) = records.first() else {
        return Err(last_err.expect("runs >= 1 and all failed"));
    };
    let mean = records.iter().map(|r| r.score).sum::<f64>() / records.len() as f64;
    let record = ScoreRecord {
        post_id: first.post_id.clone(),
        category: first.category.clone(),
        score: mean,
        rationale: first.rationale.clone(),
        source: first.source,
        run_index: records.len(),
    };
    Ok(RepeatedScore {
        runs_requested: runs,
        runs_used: records.len(),
        partial: records.len() < runs,
        record,
    })
}

/// Versioned checkpoint: parameters plus the feature-space descriptor
/// they were trained against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub feature_space: FeatureSpace,
    pub params: ScorerParams,
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    pub fn new(params: ScorerParams, feature_space: FeatureSpace) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            feature_space,
            params,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, ScorerError> {
        serde_json::from_str(json).map_err(|e| ScorerError::Remote(e.to_string()))
    }

    /// Refuses to produce a scorer when the runtime feature space differs
    /// from the one the checkpoint was trained with.
    pub fn scorer<'a>(&'a self, space: &'a FeatureSpace, lexicon: &'a MockLexicon) -> Result<SurrogateScorer<'a>, ScorerError> {
        if self.feature_space != *space {
            return Err(ScorerError::FeatureSpaceMismatch {
                checkpoint: self.feature_space.descriptor(),
                runtime: space.descriptor(),
            });
        }
        Ok(SurrogateScorer {
            params: &self.params,
            space,
            lexicon,
        })
    }
}
