//! Surrogate intensity scorer: a linear-per-category model over text
//! features, trained with plain MSE gradient descent. It stands in for
//! the remote fine-tuned model while exercising the same published math
//! (loss, update rule, warmup/cosine schedule) at desk scale.

mod score;
mod train;

pub use score::{
    repeated_score, score, Checkpoint, RemoteScorer, RepeatedScore, ScoreSource, SurrogateScorer,
};
pub use train::{gd_step, mse_loss, train, EpochStats, TrainConfig, TrainExample, TrainOutcome};

use crate::corpus::CleanPost;
use crate::extraction::{ExpectationCategory, MockLexicon};
use crate::hash::fnv1a;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("non-finite gradient at step {step} (divergence)")]
    Divergence { step: u64 },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty train split")]
    EmptyTrainSplit,
    #[error("feature space mismatch: checkpoint {checkpoint}, runtime {runtime}")]
    FeatureSpaceMismatch { checkpoint: String, runtime: String },
    #[error("category {0} is not a named category")]
    UnnamedCategory(String),
    #[error("remote scorer: {0}")]
    Remote(String),
    #[error("run {run} of repeated scoring failed: {message}")]
    RunFailed { run: usize, message: String },
}

/// Describes the feature layout so checkpoints can refuse to score
/// against a different featurization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpace {
    /// Hashed bag-of-words bucket count.
    pub bow_buckets: usize,
    /// Digest of the lexicon the category-hit features came from.
    pub lexicon_digest: String,
}

impl FeatureSpace {
    pub fn new(bow_buckets: usize, lexicon: &MockLexicon) -> Self {
        let json = serde_json::to_string(lexicon).expect("lexicon serializes");
        Self {
            bow_buckets,
            lexicon_digest: format!("{:016x}", fnv1a(json.as_bytes())),
        }
    }

    /// Total feature dimensionality: 5 lexicon counts + buckets +
    /// log-length + bias.
    pub fn dim(&self) -> usize {
        5 + self.bow_buckets + 2
    }

    pub fn descriptor(&self) -> String {
        format!("v1:buckets={}:lex={}", self.bow_buckets, self.lexicon_digest)
    }

    /// Name of feature `i`, used in score rationales.
    pub fn feature_name(&self, i: usize) -> String {
        if i < 5 {
            format!("lexicon:{}", ExpectationCategory::NAMED[i].token())
        } else if i < 5 + self.bow_buckets {
            format!("bow:{}", i - 5)
        } else if i == 5 + self.bow_buckets {
            "log_length".into()
        } else {
            "bias".into()
        }
    }
}

pub const DEFAULT_BOW_BUCKETS: usize = 256;

/// Unicode-alphanumeric token runs, lowercased.
fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

/// Deterministic feature vector for one post:
/// `[category lexicon hits (5) | hashed bag-of-words (d) | log(1+chars) | 1.0]`.
pub fn featurize(post: &CleanPost, lexicon: &MockLexicon, space: &FeatureSpace) -> Vec<f64> {
    let mut v = vec![0.0; space.dim()];
    let hits = lexicon.category_hits(&post.text_clean);
    v[..5].copy_from_slice(&hits);
    for token in tokens(&post.text_clean) {
        let bucket = (fnv1a(token.as_bytes()) % space.bow_buckets as u64) as usize;
        v[5 + bucket] += 1.0;
    }
    v[5 + space.bow_buckets] = (1.0 + post.char_len() as f64).ln();
    v[5 + space.bow_buckets + 1] = 1.0;
    v
}

/// Parameters of the surrogate: one weight block per named category over
/// the shared feature space, plus optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerParams {
    pub theta: Vec<f64>,
    pub feature_dim: usize,
    pub n_categories: usize,
    pub learning_rate: f64,
    pub warmup_steps: u64,
    /// Total scheduled steps; cosine decay spans (warmup, total]. `None`
    /// holds the rate at `learning_rate` after warmup.
    pub total_steps: Option<u64>,
    /// Floor of the cosine decay, as a fraction of the base rate.
    pub min_lr_frac: f64,
    pub step: u64,
    pub epoch: u64,
    pub rng_seed: u64,
}

impl ScorerParams {
    pub fn new(feature_dim: usize, n_categories: usize, learning_rate: f64, rng_seed: u64) -> Self {
        assert!(learning_rate > 0.0, "learning rate must be positive");
        Self {
            theta: vec![0.0; feature_dim * n_categories],
            feature_dim,
            n_categories,
            learning_rate,
            warmup_steps: 500,
            total_steps: None,
            min_lr_frac: 0.1,
            step: 0,
            epoch: 0,
            rng_seed,
        }
    }

    /// Weight block for one category.
    pub fn weights(&self, category_index: usize) -> &[f64] {
        let d = self.feature_dim;
        &self.theta[category_index * d..(category_index + 1) * d]
    }

    /// Learning rate at a given step: linear ramp over the warmup, then
    /// cosine decay to `min_lr_frac * learning_rate` over the remaining
    /// horizon (or flat when no horizon is set).
    pub fn lr_at(&self, step: u64) -> f64 {
        let base = self.learning_rate;
        if step < self.warmup_steps {
            return base * (step + 1) as f64 / self.warmup_steps as f64;
        }
        match self.total_steps {
            Some(total) if total > self.warmup_steps => {
                let t = (step - self.warmup_steps) as f64;
                let span = (total - self.warmup_steps) as f64;
                let min_lr = self.min_lr_frac * base;
                min_lr + (base - min_lr) * (1.0 + (std::f64::consts::PI * (t / span).min(1.0)).cos()) / 2.0
            }
            _ => base,
        }
    }

    pub fn index_of(category: &ExpectationCategory) -> Result<usize, ScorerError> {
        ExpectationCategory::NAMED
            .iter()
            .position(|c| c == category)
            .ok_or_else(|| ScorerError::UnnamedCategory(category.token().to_string()))
    }
}

/// One scored (post, category) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub post_id: String,
    pub category: ExpectationCategory,
    pub score: f64,
    pub rationale: String,
    pub source: ScoreSourceKind,
    pub run_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSourceKind {
    Surrogate,
    Remote,
}

pub const SCORE_MIN: f64 = 1.0;
pub const SCORE_MAX: f64 = 7.0;

pub fn clamp_score(raw: f64) -> f64 {
    raw.clamp(SCORE_MIN, SCORE_MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RemovedCounts;

    fn clean(text: &str) -> CleanPost {
        CleanPost {
            id: "p".into(),
            text_clean: text.into(),
            removed: RemovedCounts::default(),
            normalizations_applied: vec![],
        }
    }

    fn lexicon() -> MockLexicon {
        MockLexicon::from_json(
            r#"{"entries": [
                {"category": "Natural", "label": "Scenery", "score": 7, "phrases": ["desert"]},
                {"category": "Social", "label": "Shared", "score": 6, "phrases": ["with friends"]}
            ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn empty_feature_text_has_zero_counts_and_bias_one() {
        let space = FeatureSpace::new(16, &lexicon());
        let v = featurize(&clean(""), &lexicon(), &space);
        assert_eq!(v.len(), space.dim());
        assert!(v[..5].iter().all(|&x| x == 0.0));
        assert!(v[5..5 + 16].iter().all(|&x| x == 0.0));
        assert_eq!(v[5 + 16], 1.0f64.ln()); // log(1+0)
        assert_eq!(v[5 + 16 + 1], 1.0);
    }

    #[test]
    fn doubling_text_doubles_counts_and_grows_log_length() {
        let space = FeatureSpace::new(16, &lexicon());
        let once = featurize(&clean("the desert with friends"), &lexicon(), &space);
        let twice = featurize(
            &clean("the desert with friends the desert with friends"),
            &lexicon(),
            &space,
        );
        for i in 0..5 + 16 {
            assert_eq!(twice[i], 2.0 * once[i], "feature {i}");
        }
        let log_idx = 5 + 16;
        assert!(twice[log_idx] > once[log_idx]);
        assert_eq!(twice[log_idx + 1], 1.0);
    }

    #[test]
    fn bucket_counts_match_direct_token_count_oracle() {
        // 20-word vocabulary, counted directly, then folded into buckets
        // with the same hash. Collisions must add, not overwrite.
        let vocab: Vec<String> = (0..20).map(|i| format!("word{i}")).collect();
        let mut text = String::new();
        for (i, w) in vocab.iter().enumerate() {
            for _ in 0..=i {
                text.push_str(w);
                text.push(' ');
            }
        }
        let space = FeatureSpace::new(8, &lexicon());
        let v = featurize(&clean(&text), &lexicon(), &space);

        let mut oracle = vec![0.0f64; 8];
        for (i, w) in vocab.iter().enumerate() {
            let bucket = (fnv1a(w.as_bytes()) % 8) as usize;
            oracle[bucket] += (i + 1) as f64;
        }
        assert_eq!(&v[5..5 + 8], oracle.as_slice());
    }

    #[test]
    fn featurize_is_deterministic() {
        let space = FeatureSpace::new(32, &lexicon());
        let a = featurize(&clean("desert trip with friends"), &lexicon(), &space);
        let b = featurize(&clean("desert trip with friends"), &lexicon(), &space);
        assert_eq!(a, b);
    }

    #[test]
    fn schedule_ramps_then_decays() {
        let mut p = ScorerParams::new(3, 5, 0.2, 1);
        p.total_steps = Some(1000);
        // Step 0: positive and at most base.
        let lr0 = p.lr_at(0);
        assert!(lr0 > 0.0 && lr0 <= 0.2);
        // End of warmup: exactly base.
        assert!((p.lr_at(500) - 0.2).abs() < 1e-15);
        assert!((p.lr_at(499) - 0.2).abs() < 1e-15);
        // Non-increasing afterwards, floored at min_lr_frac * base.
        let mut prev = p.lr_at(500);
        for s in 501..=1000 {
            let lr = p.lr_at(s);
            assert!(lr <= prev + 1e-15, "increased at {s}");
            prev = lr;
        }
        assert!((p.lr_at(1000) - 0.02).abs() < 1e-12);
    }

    #[test]
    fn zero_warmup_holds_base_rate() {
        let mut p = ScorerParams::new(1, 1, 0.1, 1);
        p.warmup_steps = 0;
        assert_eq!(p.lr_at(0), 0.1);
        assert_eq!(p.lr_at(100), 0.1);
    }
}
