//! `survey`: response CSV -> quality-filtered ratings, reliability
//! statistics, and aggregated per-item ground truth.

use super::{artifacts, json_bytes, StageError};
use crate::config::PipelineConfig;
use crate::manifest::StageRecorder;
use expect_core::extraction::ExpectationCategory;
use expect_core::survey::{
    aggregate_item_scores, apply_overrides, cronbach_alpha, krippendorff_alpha, parse_item_id,
    quality_filter, read_overrides, read_responses, QualityConfig, RejectedCounts,
    ReliabilityReport, ResponseRejectReason, ScoreMatrix, SurveyResponse,
};
use std::collections::BTreeMap;

/// Cronbach items are the five category sub-scores of one (rater, post)
/// questionnaire; Krippendorff units are the (post, category) items.
fn reliability_matrices(kept: &[SurveyResponse]) -> (ScoreMatrix, ScoreMatrix) {
    let mut raters: Vec<&str> = kept.iter().map(|r| r.rater_id.as_str()).collect();
    raters.sort_unstable();
    raters.dedup();
    let rater_index: BTreeMap<&str, usize> =
        raters.iter().enumerate().map(|(i, &r)| (r, i)).collect();

    // Krippendorff: raters x items.
    let mut items: Vec<&str> = kept.iter().map(|r| r.item_id.as_str()).collect();
    items.sort_unstable();
    items.dedup();
    let item_index: BTreeMap<&str, usize> =
        items.iter().enumerate().map(|(i, &it)| (it, i)).collect();
    let mut kripp = ScoreMatrix::new(raters.len(), items.len());
    for r in kept {
        kripp.set(
            rater_index[r.rater_id.as_str()],
            item_index[r.item_id.as_str()],
            f64::from(r.score),
        );
    }

    // Cronbach: (rater, post) rows x 5 category columns.
    let mut row_keys: Vec<(String, String)> = Vec::new();
    let mut cells: BTreeMap<(String, String), BTreeMap<usize, f64>> = BTreeMap::new();
    for r in kept {
        if let Ok((post, category)) = parse_item_id(&r.item_id) {
            if let Some(cat_idx) = ExpectationCategory::NAMED.iter().position(|c| *c == category) {
                let key = (r.rater_id.clone(), post);
                if !cells.contains_key(&key) {
                    row_keys.push(key.clone());
                }
                cells.entry(key).or_default().insert(cat_idx, f64::from(r.score));
            }
        }
    }
    row_keys.sort();
    let mut cron = ScoreMatrix::new(row_keys.len(), 5);
    for (row, key) in row_keys.iter().enumerate() {
        for (&col, &val) in &cells[key] {
            cron.set(row, col, val);
        }
    }
    (cron, kripp)
}

pub fn run(cfg: &PipelineConfig, rec: &mut StageRecorder) -> Result<Vec<String>, StageError> {
    let responses_path = &cfg.paths.responses;
    if !responses_path.exists() {
        return Err(StageError::Config(format!(
            "responses file {} does not exist",
            responses_path.display()
        )));
    }
    rec.record_input(responses_path)?;

    let file = std::fs::File::open(responses_path)
        .map_err(|e| StageError::Io(anyhow::anyhow!("opening responses: {e}")))?;
    let responses = read_responses(std::io::BufReader::new(file))
        .map_err(|e| StageError::Validation(e.to_string()))?;

    let quality_cfg = QualityConfig {
        time_floor: cfg.survey.time_floor,
        attention_pass_floor: cfg.survey.attention_pass_floor,
        ttr_floor: cfg.survey.ttr_floor,
    };
    let (kept, rejected) = quality_filter(&responses, &quality_cfg);

    let mut rejected_counts = RejectedCounts::default();
    let mut rejections_csv = String::from("response_id,rater_id,item_id,reason\n");
    for r in &rejected {
        match r.reason {
            ResponseRejectReason::Attention | ResponseRejectReason::AttentionItem => {
                rejected_counts.attention += 1
            }
            ResponseRejectReason::Speed => rejected_counts.speed += 1,
            ResponseRejectReason::Lexical => rejected_counts.lexical += 1,
        }
        rejections_csv.push_str(&format!(
            "{},{},{},{}\n",
            r.response.response_id,
            r.response.rater_id,
            r.response.item_id,
            r.reason.as_str()
        ));
    }
    rec.write_output(
        artifacts::SURVEY_REJECTIONS,
        rejections_csv.as_bytes(),
        rejected.len(),
    )?;

    let (cron, kripp) = reliability_matrices(&kept);
    let report = ReliabilityReport {
        cronbach_alpha: cronbach_alpha(&cron).ok(),
        krippendorff_alpha: krippendorff_alpha(&kripp).ok(),
        n_raters: kripp.n_raters,
        n_items: kripp.n_items,
        rejected: rejected_counts,
    };
    rec.write_output(artifacts::RELIABILITY, &json_bytes(&report)?, 1)?;

    let mut items = aggregate_item_scores(&kept, cfg.survey.min_raters);
    let mut override_log = Vec::new();
    if let Some(path) = &cfg.paths.overrides {
        if path.exists() {
            rec.record_input(path)?;
            let file = std::fs::File::open(path)
                .map_err(|e| StageError::Io(anyhow::anyhow!("opening overrides: {e}")))?;
            let overrides = read_overrides(std::io::BufReader::new(file))
                .map_err(|e| StageError::Validation(e.to_string()))?;
            override_log = apply_overrides(&mut items, &overrides);
        }
    }

    let mut items_csv = String::from("item_id,mean_score,n_ratings,under_rated,overridden\n");
    for item in items.values() {
        items_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            item.item_id, item.mean_score, item.n_ratings, item.under_rated, item.overridden
        ));
    }
    rec.write_output(artifacts::ITEM_SCORES, items_csv.as_bytes(), items.len())?;

    let mut summary = vec![
        format!("kept {} of {} responses", kept.len(), responses.len()),
        format!(
            "cronbach {:?} krippendorff {:?}",
            report.cronbach_alpha.map(|a| (a * 1000.0).round() / 1000.0),
            report.krippendorff_alpha.map(|a| (a * 1000.0).round() / 1000.0)
        ),
        format!("aggregated {} items", items.len()),
    ];
    summary.extend(override_log);
    Ok(summary)
}
