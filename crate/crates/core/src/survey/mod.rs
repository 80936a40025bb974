//! Questionnaire ingestion, quality controls, reliability statistics,
//! and ground-truth aggregation.
//!
//! Responses arrive as CSV with one row per (rater, item) rating on the
//! 7-point scale. Item ids follow the `<post_id>::<CategoryToken>`
//! convention so that scores can be joined back to posts and categories
//! without a separate questionnaire file.

mod aggregate;
mod quality;
mod reliability;

pub use aggregate::{
    aggregate_item_scores, apply_overrides, read_overrides, split_corpus, AggregatedItem,
    LabeledPost, Override, SplitCounts, Splits,
};
pub use quality::{quality_filter, QualityConfig, RejectedResponse, ResponseRejectReason};
pub use reliability::{cronbach_alpha, krippendorff_alpha, ScoreMatrix};

use crate::extraction::ExpectationCategory;
use serde::{Deserialize, Serialize};
use std::io::Read;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurveyError {
    #[error("alpha undefined: {0}")]
    UndefinedAlpha(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("bad item id {0:?}: expected <post_id>::<category>")]
    BadItemId(String),
    #[error("response {id}: {reason}")]
    InvalidResponse { id: String, reason: String },
    #[error("split shortfall: {0}")]
    SplitShortfall(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One questionnaire item shown to raters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurveyItem {
    pub item_id: String,
    pub post_id: String,
    pub category: ExpectationCategory,
    pub prompt_text: String,
}

impl SurveyItem {
    /// Builds the item for one (post, category) pair with the standard
    /// question stem.
    pub fn new(post_id: &str, category: ExpectationCategory, post_text: &str) -> Self {
        let item_id = item_id(post_id, &category);
        let prompt_text = format!(
            "To what extent does the following post express strong expectation about {}?\n\n{}",
            category, post_text
        );
        Self {
            item_id,
            post_id: post_id.to_string(),
            category,
            prompt_text,
        }
    }
}

/// Canonical item id for a (post, category) pair.
pub fn item_id(post_id: &str, category: &ExpectationCategory) -> String {
    format!("{}::{}", post_id, category.token())
}

/// Splits an item id back into (post_id, category).
pub fn parse_item_id(item: &str) -> Result<(String, ExpectationCategory), SurveyError> {
    let (post, cat) = item
        .rsplit_once("::")
        .ok_or_else(|| SurveyError::BadItemId(item.to_string()))?;
    if post.is_empty() || cat.is_empty() {
        return Err(SurveyError::BadItemId(item.to_string()));
    }
    Ok((post.to_string(), cat.parse().unwrap()))
}

/// One rater's rating of one item.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub response_id: String,
    pub rater_id: String,
    pub item_id: String,
    pub score: u8,
    pub rationale: String,
    pub response_time: f64,
    pub region_code: String,
    pub is_attention_check: bool,
    #[serde(default, deserialize_with = "de_opt_bool", serialize_with = "ser_opt_bool")]
    pub attention_pass: Option<bool>,
}

fn de_opt_bool<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<bool>, D::Error> {
    let s: Option<String> = Option::deserialize(d)?;
    match s.as_deref() {
        None | Some("") => Ok(None),
        Some("true") | Some("1") => Ok(Some(true)),
        Some("false") | Some("0") => Ok(Some(false)),
        Some(other) => Err(serde::de::Error::custom(format!(
            "bad attention_pass value {other:?}"
        ))),
    }
}

fn ser_opt_bool<S: serde::Serializer>(v: &Option<bool>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        None => s.serialize_str(""),
        Some(b) => s.serialize_str(if *b { "true" } else { "false" }),
    }
}

/// Reads the response CSV (header `response_id,rater_id,item_id,score,
/// rationale,response_time,region_code,is_attention_check,attention_pass`).
pub fn read_responses<R: Read>(reader: R) -> Result<Vec<SurveyResponse>, SurveyError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let resp: SurveyResponse = row?;
        if !(1..=7).contains(&resp.score) {
            return Err(SurveyError::InvalidResponse {
                id: resp.response_id,
                reason: format!("score {} outside 1..=7", resp.score),
            });
        }
        if resp.response_time < 0.0 {
            return Err(SurveyError::InvalidResponse {
                id: resp.response_id,
                reason: "negative response_time".into(),
            });
        }
        out.push(resp);
    }
    Ok(out)
}

/// Reliability summary emitted by the survey stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub cronbach_alpha: Option<f64>,
    pub krippendorff_alpha: Option<f64>,
    pub n_raters: usize,
    pub n_items: usize,
    pub rejected: RejectedCounts,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedCounts {
    pub attention: usize,
    pub speed: usize,
    pub lexical: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn item_id_round_trips() {
        let cat = ExpectationCategory::ExoticCultural;
        let id = item_id("p007", &cat);
        assert_eq!(id, "p007::ExoticCultural");
        let (post, parsed) = parse_item_id(&id).unwrap();
        assert_eq!(post, "p007");
        assert_eq!(parsed, cat);
    }

    #[test]
    fn read_responses_enforces_score_range() {
        let csv = "response_id,rater_id,item_id,score,rationale,response_time,region_code,is_attention_check,attention_pass\n\
                   r1,u1,p1::Natural,9,too high,3.0,CN-11,false,\n";
        assert!(read_responses(csv.as_bytes()).is_err());
    }

    #[test]
    fn read_responses_parses_attention_fields() {
        let csv = "response_id,rater_id,item_id,score,rationale,response_time,region_code,is_attention_check,attention_pass\n\
                   r1,u1,p1::Natural,5,vivid scenery words,3.0,CN-11,false,\n\
                   r2,u1,chk1::Other,4,check,3.0,CN-11,true,true\n";
        let rows = read_responses(csv.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].attention_pass, None);
        assert_eq!(rows[1].attention_pass, Some(true));
        assert!(rows[1].is_attention_check);
    }
}
