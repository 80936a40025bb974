//! Deterministic offline provider: a keyword-lexicon engine that emits
//! the same structured reply schema as the remote endpoint. Because GPT
//! outputs are not reproducible, this is the reference oracle for every
//! extraction test and for offline pipeline runs.

use super::provider::{Provider, ProviderError, ProviderReply, ProviderRequest};
use super::ExpectationCategory;
use serde::{Deserialize, Serialize};

/// One lexicon entry: a subcategory label with its trigger phrases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub category: ExpectationCategory,
    pub label: String,
    pub score: u8,
    /// Lowercase trigger phrases; a hit on any phrase emits the item.
    pub phrases: Vec<String>,
}

/// Keyword table backing the mock provider and the surrogate's
/// per-category features. Shipped as JSON data.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MockLexicon {
    pub entries: Vec<LexiconEntry>,
}

impl MockLexicon {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// Counts phrase occurrences per named category in lowercased text.
    pub fn category_hits(&self, text: &str) -> [f64; 5] {
        let lowered = text.to_lowercase();
        let mut hits = [0.0f64; 5];
        for entry in &self.entries {
            let slot = ExpectationCategory::NAMED
                .iter()
                .position(|c| *c == entry.category);
            if let Some(slot) = slot {
                for phrase in &entry.phrases {
                    hits[slot] += count_occurrences(&lowered, phrase) as f64;
                }
            }
        }
        hits
    }
}

pub(crate) fn count_occurrences(haystack_lower: &str, needle_lower: &str) -> usize {
    if needle_lower.is_empty() {
        return 0;
    }
    let mut count = 0;
    let mut rest = haystack_lower;
    while let Some(pos) = rest.find(needle_lower) {
        count += 1;
        rest = &rest[pos + needle_lower.len()..];
    }
    count
}

/// Marker lines framing the post text inside a prompt, shared with the
/// prompt renderer so the mock can recover the original text.
pub(crate) const POST_OPEN: &str = "\"\"\"";

/// Item schema the provider is instructed to reply with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplyItem {
    pub label: String,
    pub category: String,
    pub expression: String,
    pub inference: String,
    pub score: u8,
}

pub struct MockProvider {
    lexicon: MockLexicon,
}

impl MockProvider {
    pub fn new(lexicon: MockLexicon) -> Self {
        Self { lexicon }
    }

    /// Scans the post text for lexicon phrases and emits one reply item
    /// per matched entry. Entries are scanned in lexicon order, so the
    /// reply is deterministic for a given text.
    pub fn analyze(&self, text: &str) -> Vec<ReplyItem> {
        let lowered = text.to_lowercase();
        let mut items = Vec::new();
        for entry in &self.lexicon.entries {
            let matched: Vec<&String> = entry
                .phrases
                .iter()
                .filter(|p| count_occurrences(&lowered, &p.to_lowercase()) > 0)
                .collect();
            if matched.is_empty() {
                continue;
            }
            let phrase_list = matched
                .iter()
                .map(|p| p.as_str())
                .collect::<Vec<_>>()
                .join("; ");
            items.push(ReplyItem {
                label: entry.label.clone(),
                category: entry.category.token().to_string(),
                expression: phrase_list.clone(),
                inference: format!("The post mentions \"{phrase_list}\"."),
                score: entry.score,
            });
        }
        items
    }
}

impl Provider for MockProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderReply, ProviderError> {
        // Recover the post text framed by the prompt renderer.
        let text = extract_quoted(&request.prompt).unwrap_or(&request.prompt);
        let items = self.analyze(text);
        let text = serde_json::to_string(&items)
            .map_err(|e| ProviderError::Malformed(e.to_string()))?;
        Ok(ProviderReply { text })
    }
}

fn extract_quoted(prompt: &str) -> Option<&str> {
    let start = prompt.find(POST_OPEN)? + POST_OPEN.len();
    let end = prompt[start..].rfind(POST_OPEN)? + start;
    (end > start).then(|| &prompt[start..end])
}
