//! `ingest`: corpus JSONL -> cleaned, filtered, deduplicated posts.

use super::{artifacts, jsonl_bytes, PipelinePost, StageError};
use crate::config::PipelineConfig;
use crate::manifest::StageRecorder;
use expect_core::corpus::{ingest_corpus, read_corpus, FilterConfig, IngestConfig};

pub fn run(cfg: &PipelineConfig, rec: &mut StageRecorder) -> Result<Vec<String>, StageError> {
    let corpus_path = &cfg.paths.corpus;
    if !corpus_path.exists() {
        return Err(StageError::Config(format!(
            "corpus file {} does not exist",
            corpus_path.display()
        )));
    }
    rec.record_input(corpus_path)?;

    let file = std::fs::File::open(corpus_path)
        .map_err(|e| StageError::Io(anyhow::anyhow!("opening corpus: {e}")))?;
    let posts = read_corpus(std::io::BufReader::new(file))
        .map_err(|e| StageError::Validation(format!("corpus: {e}")))?;

    let tables = cfg.tables().map_err(|e| StageError::Config(e.to_string()))?;
    let ingest_cfg = IngestConfig {
        filter: FilterConfig::default(),
        minhash_k: cfg.minhash.k,
        minhash_seed: cfg.minhash.seed,
        dedup_threshold: cfg.minhash.threshold,
    };
    let outcome = ingest_corpus(&posts, &tables, &ingest_cfg)
        .map_err(|e| StageError::Validation(e.to_string()))?;

    let pipeline_posts: Vec<PipelinePost> = outcome
        .kept
        .iter()
        .map(|(clean, raw)| PipelinePost {
            id: clean.id.clone(),
            platform: raw.platform,
            text_clean: clean.text_clean.clone(),
            likes: raw.likes.unwrap_or(0),
            comments: raw.comments.unwrap_or(0),
            timestamp: raw.timestamp,
            removed: clean.removed,
            normalizations_applied: clean.normalizations_applied.clone(),
        })
        .collect();

    rec.write_output(
        artifacts::POSTS_CLEAN,
        &jsonl_bytes(&pipeline_posts)?,
        pipeline_posts.len(),
    )?;

    let mut rejections = String::from("id,stage,reason\n");
    for r in &outcome.rejections {
        rejections.push_str(&format!("{},{},{}\n", r.id, r.stage, r.reason));
    }
    rec.write_output(
        artifacts::REJECTIONS,
        rejections.as_bytes(),
        outcome.rejections.len(),
    )?;

    let mut dedup = String::from("id,kept_id,estimated_similarity\n");
    for d in &outcome.dedup_log.dropped {
        dedup.push_str(&format!("{},{},{}\n", d.id, d.kept_id, d.estimated_similarity));
    }
    rec.write_output(
        artifacts::DEDUP_LOG,
        dedup.as_bytes(),
        outcome.dedup_log.dropped.len(),
    )?;

    Ok(vec![
        format!("kept {} posts", pipeline_posts.len()),
        format!("rejected {}", outcome.rejections.len()),
        format!("duplicate drops {}", outcome.dedup_log.dropped.len()),
    ])
}
