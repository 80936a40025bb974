//! Engagement analysis: what drives likes. OLS with inference, a
//! from-scratch random-forest regressor with gain importances, partial
//! dependence curves, and exact interventional Shapley attribution.

mod forest;
mod ols;
mod pdp;
mod shap;
pub mod stats;

pub use forest::{rf_fit, Forest, RfParams, Tree};
pub use ols::{ols_fit, OlsResult, OlsTerm};
pub use pdp::{pdp, PdpCurve};
pub use shap::{shap_exact, PredictRow, ShapMatrix};
pub use stats::t_pvalue;

use crate::extraction::ExpectationCategory;
use crate::scorer::ScoreRecord;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngagementError {
    #[error("need more rows than columns for OLS: {rows} rows, {cols} cols")]
    NotEnoughRows { rows: usize, cols: usize },
    #[error("design matrix is rank-deficient at column {column}")]
    RankDeficient { column: String },
    #[error("feature {0} out of range")]
    BadFeature(usize),
    #[error("feature {0} is constant; partial dependence collapses to one point")]
    ConstantFeature(usize),
    #[error("empty background sample")]
    EmptyBackground,
    #[error("design matrix is empty")]
    EmptyDesign,
    #[error("stats: {0}")]
    Stats(String),
}

/// Regression design: one row per post, the five mean expectation scores
/// as features, scaled like count as target. Rows are sorted by post id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub post_ids: Vec<String>,
    pub feature_names: Vec<String>,
    /// Row-major feature values, `n_rows * n_features`.
    pub rows: Vec<f64>,
    pub n_features: usize,
    pub target: Vec<f64>,
    /// Raw scores are used as-is; recorded so downstream readers know.
    pub standardized: bool,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.row(i)[j]).collect()
    }
}

/// Builds the design matrix from per-(post, category) mean scores and
/// like counts. Posts missing any of the five category scores or their
/// like count are excluded and reported in the second return value.
pub fn build_design(
    score_records: &[ScoreRecord],
    likes: &BTreeMap<String, u64>,
    scale: f64,
) -> (DesignMatrix, Vec<String>) {
    assert!(scale > 0.0, "scale must be positive");
    let mut per_post: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in score_records {
        per_post
            .entry(r.post_id.as_str())
            .or_default()
            .insert(r.category.token(), r.score);
    }

    let mut design = DesignMatrix {
        post_ids: Vec::new(),
        feature_names: ExpectationCategory::NAMED
            .iter()
            .map(|c| c.token().to_string())
            .collect(),
        rows: Vec::new(),
        n_features: 5,
        target: Vec::new(),
        standardized: false,
    };
    let mut excluded = Vec::new();

    for (post_id, scores) in per_post {
        let complete: Option<Vec<f64>> = ExpectationCategory::NAMED
            .iter()
            .map(|c| scores.get(c.token()).copied())
            .collect();
        match (complete, likes.get(post_id)) {
            (Some(row), Some(&like_count)) => {
                design.post_ids.push(post_id.to_string());
                design.rows.extend(row);
                design.target.push(like_count as f64 / scale);
            }
            _ => excluded.push(post_id.to_string()),
        }
    }
    (design, excluded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::ScoreSourceKind;

    fn record(post: &str, cat: &ExpectationCategory, score: f64) -> ScoreRecord {
        ScoreRecord {
            post_id: post.into(),
            category: cat.clone(),
            score,
            rationale: String::new(),
            source: ScoreSourceKind::Surrogate,
            run_index: 10,
        }
    }

    fn full_records(post: &str, base: f64) -> Vec<ScoreRecord> {
        ExpectationCategory::NAMED
            .iter()
            .enumerate()
            .map(|(i, c)| record(post, c, base + i as f64 * 0.1))
            .collect()
    }

    #[test]
    fn likes_scale_by_100() {
        let mut records = full_records("a", 4.0);
        records.extend(full_records("b", 3.0));
        let likes = BTreeMap::from([("a".to_string(), 25_800u64), ("b".to_string(), 0u64)]);
        let (design, excluded) = build_design(&records, &likes, 100.0);
        assert!(excluded.is_empty());
        assert_eq!(design.target, vec![258.0, 0.0]);
    }

    #[test]
    fn missing_category_excludes_the_post() {
        let mut records = full_records("a", 4.0);
        records.extend(full_records("b", 3.0));
        records.retain(|r| !(r.post_id == "b" && r.category == ExpectationCategory::Social));
        let likes = BTreeMap::from([("a".to_string(), 100u64), ("b".to_string(), 100u64)]);
        let (design, excluded) = build_design(&records, &likes, 100.0);
        assert_eq!(design.post_ids, vec!["a".to_string()]);
        assert_eq!(excluded, vec!["b".to_string()]);
    }

    #[test]
    fn target_rank_order_matches_likes_rank_order() {
        let mut records = Vec::new();
        let mut likes = BTreeMap::new();
        let like_counts = [5u64, 9_000, 120, 77, 31_000];
        for (i, &lk) in like_counts.iter().enumerate() {
            let id = format!("p{i}");
            records.extend(full_records(&id, 3.0));
            likes.insert(id, lk);
        }
        let (design, _) = build_design(&records, &likes, 100.0);
        let mut by_target: Vec<usize> = (0..design.n_rows()).collect();
        by_target.sort_by(|&a, &b| design.target[a].partial_cmp(&design.target[b]).unwrap());
        let mut by_likes: Vec<usize> = (0..design.n_rows()).collect();
        by_likes.sort_by_key(|&i| like_counts[i]);
        assert_eq!(by_target, by_likes);
    }

    #[test]
    fn rows_are_sorted_by_post_id() {
        let mut records = full_records("zz", 4.0);
        records.extend(full_records("aa", 3.0));
        let likes = BTreeMap::from([("zz".to_string(), 1u64), ("aa".to_string(), 2u64)]);
        let (design, _) = build_design(&records, &likes, 100.0);
        assert_eq!(design.post_ids, vec!["aa".to_string(), "zz".to_string()]);
    }
}
