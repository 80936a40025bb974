//! `agree`: Bland-Altman concordance between surrogate scores and
//! aggregated human scores on the item intersection.

use super::{artifacts, json_bytes, require_artifact, StageError};
use crate::config::PipelineConfig;
use crate::manifest::StageRecorder;
use expect_core::agreement::bland_altman;
use std::collections::BTreeMap;

/// Reads `scores.csv` into (item_id -> score) using the
/// `<post>::<category>` item convention.
pub fn read_model_scores(path: &std::path::Path) -> Result<BTreeMap<String, f64>, StageError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| StageError::Io(anyhow::anyhow!("opening {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| StageError::Validation(format!("scores: {e}")))?;
        let post = row.get(0).unwrap_or_default();
        let category = row.get(1).unwrap_or_default();
        let score: f64 = row
            .get(2)
            .unwrap_or_default()
            .parse()
            .map_err(|e| StageError::Validation(format!("scores value: {e}")))?;
        out.insert(format!("{post}::{category}"), score);
    }
    Ok(out)
}

pub fn run(cfg: &PipelineConfig, rec: &mut StageRecorder) -> Result<Vec<String>, StageError> {
    let out_dir = &cfg.paths.out_dir;
    let scores_path = require_artifact(out_dir, artifacts::SCORES)?;
    let items_path = require_artifact(out_dir, artifacts::ITEM_SCORES)?;
    rec.record_input(&scores_path)?;
    rec.record_input(&items_path)?;

    let model = read_model_scores(&scores_path)?;
    let human = super::train::read_item_scores(&items_path)?;

    let report = bland_altman(&model, &human, 1.96)
        .map_err(|e| StageError::Validation(e.to_string()))?;
    rec.write_output(artifacts::AGREEMENT, &json_bytes(&report)?, report.n)?;

    let mut pairs = String::from("item_id,mean_of_pair,diff\n");
    for p in &report.pairs {
        pairs.push_str(&format!("{},{},{}\n", p.item_id, p.mean_of_pair, p.diff));
    }
    rec.write_output(artifacts::BA_PAIRS, pairs.as_bytes(), report.pairs.len())?;

    let lines = format!(
        "stat,value\nmean_diff,{}\nloa_low,{}\nloa_high,{}\n",
        report.mean_diff, report.loa_low, report.loa_high
    );
    rec.write_output(artifacts::BA_LINES, lines.as_bytes(), 3)?;

    Ok(vec![
        format!("paired {} items", report.n),
        format!(
            "mean diff {:.4}, LoA [{:.4}, {:.4}], within {:.1}%",
            report.mean_diff,
            report.loa_low,
            report.loa_high,
            report.pct_within_loa * 100.0
        ),
    ])
}
