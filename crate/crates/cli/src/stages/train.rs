//! `train`: aggregated item scores + cleaned posts -> stratified splits
//! and a trained surrogate checkpoint.

use super::{artifacts, json_bytes, read_pipeline_posts, require_artifact, StageError};
use crate::config::PipelineConfig;
use crate::manifest::StageRecorder;
use expect_core::extraction::{ExpectationCategory, ExtractionResult};
use expect_core::hash::derive_seed;
use expect_core::scorer::{
    featurize, train, Checkpoint, FeatureSpace, ScorerParams, TrainConfig, TrainExample,
};
use expect_core::survey::{parse_item_id, split_corpus, LabeledPost, SplitCounts};
use std::collections::{BTreeMap, BTreeSet};

/// Reads `item_scores.csv` into (item_id -> mean score).
pub fn read_item_scores(path: &std::path::Path) -> Result<BTreeMap<String, f64>, StageError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| StageError::Io(anyhow::anyhow!("opening {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| StageError::Validation(format!("item_scores: {e}")))?;
        let item_id = row.get(0).unwrap_or_default().to_string();
        let mean: f64 = row
            .get(1)
            .unwrap_or_default()
            .parse()
            .map_err(|e| StageError::Validation(format!("item_scores mean: {e}")))?;
        out.insert(item_id, mean);
    }
    Ok(out)
}

/// A post's stratum: its dominant extracted category by total content
/// share (ties lexicographic); posts with no items get `Unclassified`.
fn strata_from_extractions(
    extractions: &[ExtractionResult],
) -> BTreeMap<String, ExpectationCategory> {
    let mut out = BTreeMap::new();
    for result in extractions {
        let mut shares: BTreeMap<&str, f64> = BTreeMap::new();
        for item in &result.items {
            *shares.entry(item.mapped_category.token()).or_default() += item.content_pct;
        }
        let stratum = shares
            .iter()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(a.0)))
            .map(|(token, _)| ExpectationCategory::from_token(token))
            .unwrap_or_else(|| ExpectationCategory::Other("Unclassified".into()));
        out.insert(result.post_id.clone(), stratum);
    }
    out
}

fn read_extractions(path: &std::path::Path) -> Result<Vec<ExtractionResult>, StageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| StageError::Io(anyhow::anyhow!("reading {}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(|e| StageError::Validation(format!("extractions: {e}")))
        })
        .collect()
}

pub fn run(cfg: &PipelineConfig, rec: &mut StageRecorder) -> Result<Vec<String>, StageError> {
    let out_dir = &cfg.paths.out_dir;
    let items_path = require_artifact(out_dir, artifacts::ITEM_SCORES)?;
    let posts_path = require_artifact(out_dir, artifacts::POSTS_CLEAN)?;
    let extractions_path = require_artifact(out_dir, artifacts::EXTRACTIONS)?;
    rec.record_input(&items_path)?;
    rec.record_input(&posts_path)?;
    rec.record_input(&extractions_path)?;

    let item_scores = read_item_scores(&items_path)?;
    let posts = read_pipeline_posts(&posts_path)?;
    let posts_by_id: BTreeMap<&str, &super::PipelinePost> =
        posts.iter().map(|p| (p.id.as_str(), p)).collect();
    let strata = strata_from_extractions(&read_extractions(&extractions_path)?);

    // Labeled posts: those with at least one aggregated item that maps
    // onto a retained post.
    let mut labeled_ids: BTreeSet<String> = BTreeSet::new();
    for item_id in item_scores.keys() {
        if let Ok((post_id, _)) = parse_item_id(item_id) {
            if posts_by_id.contains_key(post_id.as_str()) {
                labeled_ids.insert(post_id);
            }
        }
    }
    if labeled_ids.is_empty() {
        return Err(StageError::Validation(
            "no aggregated item matches a retained post".into(),
        ));
    }

    let labeled: Vec<LabeledPost> = labeled_ids
        .iter()
        .map(|id| LabeledPost {
            post_id: id.clone(),
            stratum: strata
                .get(id)
                .cloned()
                .unwrap_or_else(|| ExpectationCategory::Other("Unclassified".into())),
        })
        .collect();

    let n = labeled.len();
    let counts = SplitCounts {
        train: (cfg.scorer.train_fraction * n as f64).floor() as usize,
        validation: (cfg.scorer.val_fraction * n as f64).floor() as usize,
    };
    let split_seed = derive_seed(cfg.scorer.seed, "split");
    let splits = split_corpus(&labeled, counts, split_seed)
        .map_err(|e| StageError::Validation(e.to_string()))?;
    rec.write_output(artifacts::SPLITS, &json_bytes(&splits)?, n)?;

    // Featurize and assemble examples per split.
    let lexicon = cfg.lexicon().map_err(|e| StageError::Config(e.to_string()))?;
    let space = FeatureSpace::new(cfg.scorer.bow_buckets, &lexicon);
    let mut features: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for id in &labeled_ids {
        let post = posts_by_id[id.as_str()].clean_post();
        features.insert(id.as_str(), featurize(&post, &lexicon, &space));
    }

    let examples_for = |ids: &[String]| -> Vec<TrainExample> {
        let id_set: BTreeSet<&str> = ids.iter().map(|s| s.as_str()).collect();
        let mut examples = Vec::new();
        for (item_id, &target) in &item_scores {
            if let Ok((post_id, category)) = parse_item_id(item_id) {
                if !id_set.contains(post_id.as_str()) {
                    continue;
                }
                let Some(cat_idx) = ExpectationCategory::NAMED.iter().position(|c| *c == category)
                else {
                    continue;
                };
                let Some(x) = features.get(post_id.as_str()) else {
                    continue;
                };
                examples.push(TrainExample {
                    post_id,
                    category_index: cat_idx,
                    features: x.clone(),
                    target,
                });
            }
        }
        examples
    };
    let train_examples = examples_for(&splits.train);
    let val_examples = examples_for(&splits.validation);
    if train_examples.is_empty() {
        return Err(StageError::Validation(
            "train split contains no labeled examples".into(),
        ));
    }

    let mut params0 = ScorerParams::new(space.dim(), 5, cfg.scorer.lr, cfg.scorer.seed);
    params0.warmup_steps = cfg.scorer.warmup_steps;
    let outcome = train(
        &train_examples,
        &val_examples,
        &params0,
        &TrainConfig {
            epochs: cfg.scorer.epochs,
            batch_size: cfg.scorer.batch_size,
        },
    )
    .map_err(|e| StageError::Validation(e.to_string()))?;

    let mut log = String::from("epoch,step,lr,train_mse,val_mse\n");
    for row in &outcome.curve {
        log.push_str(&format!(
            "{},{},{},{},{}\n",
            row.epoch,
            row.step,
            row.lr,
            row.train_mse,
            row.val_mse.map(|v| v.to_string()).unwrap_or_default()
        ));
    }
    rec.write_output(artifacts::TRAINING_LOG, log.as_bytes(), outcome.curve.len())?;

    let checkpoint = Checkpoint::new(outcome.params, space);
    let mut ckpt_json = checkpoint.to_json();
    ckpt_json.push('\n');
    rec.write_output(artifacts::CHECKPOINT, ckpt_json.as_bytes(), 1)?;

    let final_mse = outcome.curve.last().map(|e| e.train_mse);
    Ok(vec![
        format!(
            "split train/val/holdout = {}/{}/{}",
            splits.train.len(),
            splits.validation.len(),
            splits.holdout.len()
        ),
        format!("trained on {} examples", train_examples.len()),
        format!("final train MSE {final_mse:?}"),
    ])
}
