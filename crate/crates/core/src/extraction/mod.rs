//! Expectation extraction: elicit latent destination expectations per
//! post through a provider-abstracted LLM client, then consolidate
//! corpus-level categories by frequency.

mod consolidate;
mod extract;
mod mock;
mod provider;
mod review;

pub use consolidate::{consolidate_topk, CategoryRank};
pub use extract::{extract_corpus, extract_expectations, PromptTriple};
pub use mock::{MockLexicon, MockProvider};
pub use provider::{
    with_retries, FlakyProvider, Provider, ProviderConfig, ProviderError, ProviderReply,
    ProviderRequest, RemoteProvider, API_KEY_ENV,
};
pub use review::{
    read_filled_manifest, review_agreement, validate_sample, ReviewAgreement, ReviewRow,
};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("provider unavailable after retries: {0}")]
    ProviderUnavailable(String),
    #[error("malformed provider response after retries: {0}")]
    MalformedResponse(String),
    #[error("review sampling: {0}")]
    Review(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// The five consolidated expectation categories, plus an open slot for
/// labels that map to none of them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExpectationCategory {
    Emotional,
    Natural,
    ExoticCultural,
    Leisure,
    Social,
    Other(String),
}

impl ExpectationCategory {
    /// All five named categories, in canonical order.
    pub const NAMED: [ExpectationCategory; 5] = [
        ExpectationCategory::Emotional,
        ExpectationCategory::Natural,
        ExpectationCategory::ExoticCultural,
        ExpectationCategory::Leisure,
        ExpectationCategory::Social,
    ];

    /// Compact token used in file formats and item ids (no spaces).
    pub fn token(&self) -> &str {
        match self {
            ExpectationCategory::Emotional => "Emotional",
            ExpectationCategory::Natural => "Natural",
            ExpectationCategory::ExoticCultural => "ExoticCultural",
            ExpectationCategory::Leisure => "Leisure",
            ExpectationCategory::Social => "Social",
            ExpectationCategory::Other(s) => s,
        }
    }

    /// Parses a token; anything that is not one of the five named
    /// categories becomes `Other`.
    pub fn from_token(s: &str) -> Self {
        match s.trim() {
            "Emotional" | "Emotional Expectation" => ExpectationCategory::Emotional,
            "Natural" | "Natural Expectation" => ExpectationCategory::Natural,
            "ExoticCultural" | "Exotic Cultural" | "Exotic Cultural Expectation" => {
                ExpectationCategory::ExoticCultural
            }
            "Leisure" | "Leisure Expectation" => ExpectationCategory::Leisure,
            "Social" | "Social Expectation" => ExpectationCategory::Social,
            other => ExpectationCategory::Other(other.to_string()),
        }
    }

    /// Human-readable description, matching the published category
    /// definitions.
    pub fn description(&self) -> &str {
        match self {
            ExpectationCategory::Emotional => {
                "Focused on romantic or memorable travel experiences shared with loved ones, creating emotional resonance."
            }
            ExpectationCategory::Natural => {
                "Emphasizes appreciation of unique natural landscapes, such as deserts, lakes, and mountains."
            }
            ExpectationCategory::ExoticCultural => {
                "Highlights exploration of cultural atmospheres, including regional architecture and traditional activities."
            }
            ExpectationCategory::Leisure => {
                "Prioritizes relaxation and enjoyable travel activities, including culinary experiences and comfortable accommodations."
            }
            ExpectationCategory::Social => {
                "Reflects the importance of traveling with companions and sharing experiences through social media."
            }
            ExpectationCategory::Other(_) => "Expectations outside the five consolidated categories.",
        }
    }
}

impl fmt::Display for ExpectationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpectationCategory::ExoticCultural => write!(f, "Exotic Cultural"),
            other => write!(f, "{}", other.token()),
        }
    }
}

impl FromStr for ExpectationCategory {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Self::from_token(s))
    }
}

impl Serialize for ExpectationCategory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for ExpectationCategory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Self::from_token(&s))
    }
}

/// One extracted expectation within a post.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionItem {
    pub raw_label: String,
    pub mapped_category: ExpectationCategory,
    pub expression: String,
    pub inference: String,
    pub word_count: usize,
    pub content_pct: f64,
    pub provisional_score: u8,
}

/// All expectations extracted from one post.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub post_id: String,
    pub items: Vec<ExtractionItem>,
}

/// Editable raw-label -> category synonym table, shipped as JSON data so
/// the consolidation mapping stays reviewable.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SynonymTable {
    pub map: std::collections::BTreeMap<String, ExpectationCategory>,
}

impl SynonymTable {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        let map = serde_json::from_str(json)?;
        Ok(Self { map })
    }

    /// Maps a raw label to a category: synonym table first, then the
    /// provider's own category string, then `Other(raw_label)`. Total:
    /// every label maps to exactly one category.
    pub fn map_label(&self, raw_label: &str, provider_category: Option<&str>) -> ExpectationCategory {
        if let Some(cat) = self.map.get(raw_label) {
            return cat.clone();
        }
        if let Some(pc) = provider_category {
            let parsed = ExpectationCategory::from_token(pc);
            if !matches!(parsed, ExpectationCategory::Other(_)) {
                return parsed;
            }
        }
        ExpectationCategory::Other(raw_label.to_string())
    }
}
