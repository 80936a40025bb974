//! Corpus ingestion: load, validate, clean, normalize, and deduplicate
//! the post corpus.
//!
//! Input is JSON Lines with one [`RawPost`] per line. Cleaning strips
//! URLs, maps emoji to descriptor phrases, expands slang, and removes ad
//! markers; the inclusion filter then rejects posts that are too short,
//! lack engagement metadata, or look commercial. Near-duplicates are
//! collapsed with MinHash signatures over character 3-gram shingles.

mod clean;
mod filter;
mod minhash;
mod pipeline;

pub use clean::{clean_text, contains_url, NormalizationTables, TextCleaner};
pub use filter::{inclusion_filter, FilterConfig, Verdict};
pub use minhash::{
    dedup_filter, estimate_similarity, minhash_signature, DedupLog, DroppedPost, MinHashSignature,
};
pub use pipeline::{ingest_corpus, IngestConfig, IngestOutcome};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("post {id}: {reason}")]
    InvalidPost { id: String, reason: String },
    #[error("duplicate post id {0}")]
    DuplicateId(String),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("text has no shingles (degenerate_text)")]
    DegenerateText,
    #[error("normalization tables: {0}")]
    BadTables(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Source platform of a post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Weibo,
    Xiaohongshu,
    Other,
}

/// One raw UGC item as read from the corpus file. Engagement metrics are
/// optional at the type level because the inclusion filter must be able
/// to reject posts that arrived without them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPost {
    pub id: String,
    pub platform: Platform,
    pub text: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub likes: Option<u64>,
    #[serde(default)]
    pub comments: Option<u64>,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub geotag: Option<(f64, f64)>,
    #[serde(default)]
    pub sponsored_hint: Option<bool>,
}

/// Counts of noise elements removed by cleaning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovedCounts {
    pub urls: u32,
    pub emojis: u32,
    pub ad_markers: u32,
}

/// A post after noise removal and normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CleanPost {
    pub id: String,
    pub text_clean: String,
    pub removed: RemovedCounts,
    pub normalizations_applied: Vec<String>,
}

impl CleanPost {
    /// Unicode scalar count of the cleaned text; the unit used by the
    /// minimum-length inclusion rule.
    pub fn char_len(&self) -> usize {
        self.text_clean.chars().count()
    }
}

/// Machine-readable reason a post was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// Cleaned text shorter than the 50-character minimum.
    TooShort,
    /// Nothing left after noise removal.
    EmptyClean,
    /// Likes or comments metadata absent.
    MissingEngagement,
    /// Sponsored hint set, or ad-lexicon hits at or above threshold.
    Commercial,
    /// Dropped as a near-duplicate of an earlier post.
    Duplicate,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::TooShort => "too_short",
            RejectReason::EmptyClean => "empty_clean",
            RejectReason::MissingEngagement => "missing_engagement",
            RejectReason::Commercial => "commercial",
            RejectReason::Duplicate => "duplicate",
        }
    }
}

/// One entry of the rejection log (`id,stage,reason`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub stage: String,
    pub reason: String,
}

/// Reads a JSONL corpus, enforcing unique non-empty ids.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<RawPost>, CorpusError> {
    let mut posts = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let post: RawPost =
            serde_json::from_str(&line).map_err(|e| CorpusError::Parse { line: i + 1, source: e })?;
        if post.id.is_empty() {
            return Err(CorpusError::InvalidPost {
                id: String::from("<empty>"),
                reason: "empty id".into(),
            });
        }
        if !seen.insert(post.id.clone()) {
            return Err(CorpusError::DuplicateId(post.id));
        }
        posts.push(post);
    }
    Ok(posts)
}

/// Writes posts as JSON Lines.
pub fn write_jsonl<W: Write, T: Serialize>(mut writer: W, records: &[T]) -> Result<(), CorpusError> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(|e| CorpusError::Parse { line: 0, source: e })?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn read_corpus_rejects_duplicate_ids() {
        let data = concat!(
            r#"{"id":"a","platform":"weibo","text":"x","timestamp":"2021-01-01T00:00:00Z"}"#,
            "\n",
            r#"{"id":"a","platform":"weibo","text":"y","timestamp":"2021-01-02T00:00:00Z"}"#,
            "\n"
        );
        let err = read_corpus(data.as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId(id) if id == "a"));
    }

    #[test]
    fn read_corpus_preserves_unknown_fields_by_ignoring_them() {
        let data = r#"{"id":"a","platform":"other","text":"x","timestamp":"2021-01-01T00:00:00Z","likes":3,"comments":1,"extra_field":"ignored"}"#;
        let posts = read_corpus(data.as_bytes()).unwrap();
        assert_eq!(posts.len(), 1);
        assert_eq!(posts[0].likes, Some(3));
    }

    #[test]
    fn read_corpus_requires_parseable_timestamp() {
        let data = r#"{"id":"a","platform":"weibo","text":"x","timestamp":"not a date"}"#;
        assert!(read_corpus(data.as_bytes()).is_err());
    }
}
