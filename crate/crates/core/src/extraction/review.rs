//! Expert-review sampling: a deterministic stratified sample of model
//! outputs written as a manifest for panel annotation, and re-ingestion
//! of the filled manifest into per-category agreement figures.

use super::{ExpectationCategory, ExtractionError, ExtractionResult};
use crate::hash::derive_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Read;

/// One manifest row; `verdict` and `notes` stay empty until the panel
/// fills them in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewRow {
    pub post_id: String,
    pub category: ExpectationCategory,
    pub raw_label: String,
    pub expression: String,
    pub inference: String,
    pub provisional_score: u8,
    pub verdict: String,
    pub notes: String,
}

/// Draws a deterministic stratified sample of extraction items, one
/// stratum per mapped category. Strata too small to yield a row at the
/// requested fraction are flagged (returned separately), never silently
/// skipped. Rows are ordered by (category, post, label).
pub fn validate_sample(
    results: &[ExtractionResult],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<ReviewRow>, Vec<String>), ExtractionError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(ExtractionError::Review(format!(
            "fraction {fraction} outside (0, 1]"
        )));
    }

    let mut strata: BTreeMap<String, Vec<ReviewRow>> = BTreeMap::new();
    for result in results {
        for item in &result.items {
            strata
                .entry(item.mapped_category.token().to_string())
                .or_default()
                .push(ReviewRow {
                    post_id: result.post_id.clone(),
                    category: item.mapped_category.clone(),
                    raw_label: item.raw_label.clone(),
                    expression: item.expression.clone(),
                    inference: item.inference.clone(),
                    provisional_score: item.provisional_score,
                    verdict: String::new(),
                    notes: String::new(),
                });
        }
    }

    let mut rows = Vec::new();
    let mut flagged = Vec::new();
    for (name, mut members) in strata {
        members.sort_by(|a, b| (&a.post_id, &a.raw_label).cmp(&(&b.post_id, &b.raw_label)));
        let take = (fraction * members.len() as f64).floor() as usize;
        if take == 0 {
            flagged.push(name.clone());
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("review:{name}")));
        members.shuffle(&mut rng);
        members.truncate(take);
        rows.extend(members);
    }
    rows.sort_by(|a, b| {
        (a.category.token(), &a.post_id, &a.raw_label)
            .cmp(&(b.category.token(), &b.post_id, &b.raw_label))
    });
    Ok((rows, flagged))
}

/// Per-category agreement after panel review.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewAgreement {
    pub category: ExpectationCategory,
    pub reviewed: usize,
    pub relevant: usize,
    pub agreement: f64,
}

/// Reads a filled manifest CSV (same columns as the emitted manifest).
pub fn read_filled_manifest<R: Read>(reader: R) -> Result<Vec<ReviewRow>, ExtractionError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for row in rdr.deserialize::<ReviewRow>() {
        rows.push(row.map_err(|e| ExtractionError::Review(e.to_string()))?);
    }
    Ok(rows)
}

/// Summarizes filled verdicts into per-category agreement: the share of
/// reviewed items marked `relevant`. Rows with empty verdicts are
/// counted as unreviewed and excluded from the denominator.
pub fn review_agreement(rows: &[ReviewRow]) -> Vec<ReviewAgreement> {
    let mut by_cat: BTreeMap<String, (ExpectationCategory, usize, usize)> = BTreeMap::new();
    for row in rows {
        let verdict = row.verdict.trim().to_lowercase();
        if verdict.is_empty() {
            continue;
        }
        let e = by_cat
            .entry(row.category.token().to_string())
            .or_insert_with(|| (row.category.clone(), 0, 0));
        e.1 += 1;
        if verdict == "relevant" {
            e.2 += 1;
        }
    }
    by_cat
        .into_values()
        .map(|(category, reviewed, relevant)| ReviewAgreement {
            category,
            reviewed,
            relevant,
            agreement: relevant as f64 / reviewed as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::ExtractionItem;

    fn results_with_strata(per_stratum: usize) -> Vec<ExtractionResult> {
        let cats = [
            ExpectationCategory::Emotional,
            ExpectationCategory::Natural,
            ExpectationCategory::Leisure,
            ExpectationCategory::Social,
            ExpectationCategory::ExoticCultural,
        ];
        let mut out = Vec::new();
        let mut id = 0;
        for cat in &cats {
            for _ in 0..per_stratum {
                out.push(ExtractionResult {
                    post_id: format!("p{id:03}"),
                    items: vec![ExtractionItem {
                        raw_label: format!("{} label", cat.token()),
                        mapped_category: cat.clone(),
                        expression: "phrase".into(),
                        inference: "inference".into(),
                        word_count: 2,
                        content_pct: 0.1,
                        provisional_score: 5,
                    }],
                });
                id += 1;
            }
        }
        out
    }

    #[test]
    fn hundred_items_at_ten_percent_gives_ten_rows() {
        let results = results_with_strata(20); // 5 strata x 20 = 100 items
        let (rows, flagged) = validate_sample(&results, 0.10, 7).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(flagged.is_empty());
    }

    #[test]
    fn same_seed_gives_identical_manifest() {
        let results = results_with_strata(13);
        let (a, _) = validate_sample(&results, 0.25, 99).unwrap();
        let (b, _) = validate_sample(&results, 0.25, 99).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let (c, _) = validate_sample(&results, 0.25, 100).unwrap();
        assert_ne!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
    }

    #[test]
    fn tiny_stratum_is_flagged_not_skipped_silently() {
        let mut results = results_with_strata(20);
        // Add a one-item stratum that yields 0 rows at 10%.
        results.push(ExtractionResult {
            post_id: "tiny".into(),
            items: vec![ExtractionItem {
                raw_label: "Hidden Gems".into(),
                mapped_category: ExpectationCategory::Other("Uniqueness".into()),
                expression: "hidden treasure".into(),
                inference: "inference".into(),
                word_count: 2,
                content_pct: 0.1,
                provisional_score: 7,
            }],
        });
        let (_, flagged) = validate_sample(&results, 0.10, 7).unwrap();
        assert_eq!(flagged, vec!["Uniqueness".to_string()]);
    }

    #[test]
    fn unanimous_relevant_verdicts_give_agreement_one() {
        let results = results_with_strata(4);
        let (mut rows, _) = validate_sample(&results, 0.5, 3).unwrap();
        for row in &mut rows {
            row.verdict = "relevant".into();
        }
        let summary = review_agreement(&rows);
        assert_eq!(summary.len(), 5);
        assert!(summary.iter().all(|s| s.agreement == 1.0));
    }

    #[test]
    fn mixed_verdicts_average_correctly() {
        let results = results_with_strata(4);
        let (mut rows, _) = validate_sample(&results, 1.0, 3).unwrap();
        // Mark half of each stratum irrelevant.
        for (i, row) in rows.iter_mut().enumerate() {
            row.verdict = if i % 2 == 0 { "relevant".into() } else { "irrelevant".into() };
        }
        let summary = review_agreement(&rows);
        for s in summary {
            assert_eq!(s.reviewed, 4);
            assert_eq!(s.agreement, s.relevant as f64 / 4.0);
        }
    }

    #[test]
    fn bad_fraction_is_rejected() {
        assert!(validate_sample(&[], 0.0, 1).is_err());
        assert!(validate_sample(&[], 1.5, 1).is_err());
    }
}
