//! `score`: trained checkpoint + cleaned posts -> mean intensity score
//! per (post, category) over repeated evaluations.

use super::{artifacts, read_pipeline_posts, require_artifact, StageError};
use crate::config::PipelineConfig;
use crate::manifest::StageRecorder;
use expect_core::extraction::ExpectationCategory;
use expect_core::scorer::{repeated_score, Checkpoint, FeatureSpace};

pub fn run(cfg: &PipelineConfig, rec: &mut StageRecorder) -> Result<Vec<String>, StageError> {
    let out_dir = &cfg.paths.out_dir;
    let ckpt_path = require_artifact(out_dir, artifacts::CHECKPOINT)?;
    let posts_path = require_artifact(out_dir, artifacts::POSTS_CLEAN)?;
    rec.record_input(&ckpt_path)?;
    rec.record_input(&posts_path)?;

    let ckpt_json = std::fs::read_to_string(&ckpt_path)
        .map_err(|e| StageError::Io(anyhow::anyhow!("reading checkpoint: {e}")))?;
    let checkpoint = Checkpoint::from_json(&ckpt_json)
        .map_err(|e| StageError::Validation(e.to_string()))?;

    let lexicon = cfg.lexicon().map_err(|e| StageError::Config(e.to_string()))?;
    let space = FeatureSpace::new(cfg.scorer.bow_buckets, &lexicon);
    let scorer = checkpoint
        .scorer(&space, &lexicon)
        .map_err(|e| StageError::Validation(e.to_string()))?;

    let posts = read_pipeline_posts(&posts_path)?;
    let mut csv = String::from("post_id,category,score,runs_used,partial\n");
    let mut rows = 0usize;
    let mut partial = 0usize;
    for post in &posts {
        let clean = post.clean_post();
        for category in &ExpectationCategory::NAMED {
            let result = repeated_score(&scorer, &clean, category, cfg.scorer.runs, cfg.scorer.seed)
                .map_err(|e| StageError::Validation(e.to_string()))?;
            if result.partial {
                partial += 1;
            }
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                post.id,
                category.token(),
                result.record.score,
                result.runs_used,
                result.partial
            ));
            rows += 1;
        }
    }
    rec.write_output(artifacts::SCORES, csv.as_bytes(), rows)?;

    Ok(vec![
        format!("scored {} posts x 5 categories ({} rows)", posts.len(), rows),
        format!("partial rows {partial}"),
    ])
}
