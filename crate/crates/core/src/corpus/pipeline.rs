//! Whole-corpus ingestion pass: clean, filter, deduplicate, and log
//! every rejection with its stage and reason.

use super::{
    clean::TextCleaner, dedup_filter, inclusion_filter, minhash_signature, CleanPost, CorpusError,
    DedupLog, FilterConfig, NormalizationTables, RawPost, RejectReason, Rejection, Verdict,
};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub filter: FilterConfig,
    pub minhash_k: usize,
    pub minhash_seed: u64,
    pub dedup_threshold: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            filter: FilterConfig::default(),
            minhash_k: 128,
            minhash_seed: 0,
            dedup_threshold: 0.85,
        }
    }
}

#[derive(Debug)]
pub struct IngestOutcome {
    /// Retained posts with their raw metadata, sorted by id.
    pub kept: Vec<(CleanPost, RawPost)>,
    /// Every excluded post with stage and reason.
    pub rejections: Vec<Rejection>,
    pub dedup_log: DedupLog,
}

/// Runs the ingestion pipeline over a loaded corpus. Every input post
/// lands exactly once in either `kept` or `rejections`.
pub fn ingest_corpus(
    posts: &[RawPost],
    tables: &NormalizationTables,
    cfg: &IngestConfig,
) -> Result<IngestOutcome, CorpusError> {
    let cleaner = TextCleaner::new(tables);
    let mut rejections = Vec::new();
    let mut survivors: Vec<(CleanPost, &RawPost)> = Vec::new();

    for raw in posts {
        let clean = cleaner.clean(raw);
        match inclusion_filter(&clean, raw, &cfg.filter) {
            Verdict::Keep => survivors.push((clean, raw)),
            Verdict::Reject(reason) => rejections.push(Rejection {
                id: raw.id.clone(),
                stage: "inclusion_filter".into(),
                reason: reason.as_str().into(),
            }),
        }
    }

    let clean_posts: Vec<CleanPost> = survivors.iter().map(|(c, _)| c.clone()).collect();
    let timestamps: BTreeMap<String, chrono::DateTime<chrono::Utc>> = survivors
        .iter()
        .map(|(c, r)| (c.id.clone(), r.timestamp))
        .collect();
    // Filtered posts are at least 50 chars, so signatures cannot be
    // degenerate here.
    let signatures = clean_posts
        .iter()
        .map(|p| minhash_signature(p, cfg.minhash_k, cfg.minhash_seed))
        .collect::<Result<Vec<_>, _>>()?;

    let (retained, dedup_log) = dedup_filter(
        &clean_posts,
        &timestamps,
        &signatures,
        cfg.dedup_threshold,
    );
    for dropped in &dedup_log.dropped {
        rejections.push(Rejection {
            id: dropped.id.clone(),
            stage: "dedup_filter".into(),
            reason: RejectReason::Duplicate.as_str().into(),
        });
    }

    let raw_by_id: BTreeMap<&str, &RawPost> =
        posts.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut kept: Vec<(CleanPost, RawPost)> = retained
        .into_iter()
        .map(|c| {
            let raw = (*raw_by_id[c.id.as_str()]).clone();
            (c, raw)
        })
        .collect();
    kept.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    rejections.sort_by(|a, b| a.id.cmp(&b.id));

    Ok(IngestOutcome {
        kept,
        rejections,
        dedup_log,
    })
}
