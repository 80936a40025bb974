//! Response quality controls: attention checks, speed screening, and
//! lexical-diversity analysis.

use super::SurveyResponse;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityConfig {
    /// Responses faster than this (seconds) are rejected.
    pub time_floor: f64,
    /// Minimum fraction of attention checks a rater must pass; the
    /// default 1.0 drops a rater on any failed check.
    pub attention_pass_floor: f64,
    /// Minimum type-token ratio over a rater's concatenated rationales.
    pub ttr_floor: f64,
}

impl Default for QualityConfig {
    fn default() -> Self {
        Self {
            time_floor: 2.0,
            attention_pass_floor: 1.0,
            ttr_floor: 0.30,
        }
    }
}

/// Why a response was dropped. Rater-level failures mark every response
/// from that rater.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseRejectReason {
    /// Rater failed the attention-check pass-rate floor.
    Attention,
    /// Rater's rationales fall below the lexical-diversity floor.
    Lexical,
    /// This row is itself an attention-check item, not a scoring item.
    AttentionItem,
    /// Response answered faster than the time floor.
    Speed,
}

impl ResponseRejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResponseRejectReason::Attention => "attention",
            ResponseRejectReason::Lexical => "lexical",
            ResponseRejectReason::AttentionItem => "attention_item",
            ResponseRejectReason::Speed => "speed",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectedResponse {
    pub response: SurveyResponse,
    pub reason: ResponseRejectReason,
}

/// Type-token ratio over whitespace-delimited, lowercased tokens.
/// Zero tokens count as zero diversity.
pub fn type_token_ratio(text: &str) -> f64 {
    let tokens: Vec<String> = text.split_whitespace().map(|t| t.to_lowercase()).collect();
    if tokens.is_empty() {
        return 0.0;
    }
    let distinct: BTreeSet<&String> = tokens.iter().collect();
    distinct.len() as f64 / tokens.len() as f64
}

/// Partitions responses into kept and rejected-with-reason. Rater-level
/// checks run first (attention pass rate, then lexical diversity) and
/// drop every response of a failing rater; surviving raters then lose
/// attention-check rows (they are controls, not data) and any response
/// under the speed floor. Each rater is judged only on its own rows, so
/// adding a rater never changes another rater's outcome.
pub fn quality_filter(
    responses: &[SurveyResponse],
    cfg: &QualityConfig,
) -> (Vec<SurveyResponse>, Vec<RejectedResponse>) {
    #[derive(Default)]
    struct RaterStats {
        checks: usize,
        passed: usize,
        rationales: String,
    }
    let mut raters: BTreeMap<&str, RaterStats> = BTreeMap::new();
    for r in responses {
        let s = raters.entry(r.rater_id.as_str()).or_default();
        if r.is_attention_check {
            s.checks += 1;
            if r.attention_pass == Some(true) {
                s.passed += 1;
            }
        }
        s.rationales.push_str(&r.rationale);
        s.rationales.push(' ');
    }

    let mut rater_verdict: BTreeMap<&str, Option<ResponseRejectReason>> = BTreeMap::new();
    for (rater, s) in &raters {
        let pass_rate = if s.checks == 0 {
            1.0
        } else {
            s.passed as f64 / s.checks as f64
        };
        let verdict = if pass_rate < cfg.attention_pass_floor {
            Some(ResponseRejectReason::Attention)
        } else if type_token_ratio(&s.rationales) < cfg.ttr_floor {
            Some(ResponseRejectReason::Lexical)
        } else {
            None
        };
        rater_verdict.insert(rater, verdict);
    }

    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for r in responses {
        let reason = match rater_verdict[r.rater_id.as_str()] {
            Some(rater_reason) => Some(rater_reason),
            None if r.is_attention_check => Some(ResponseRejectReason::AttentionItem),
            None if r.response_time < cfg.time_floor => Some(ResponseRejectReason::Speed),
            None => None,
        };
        match reason {
            Some(reason) => rejected.push(RejectedResponse {
                response: r.clone(),
                reason,
            }),
            None => kept.push(r.clone()),
        }
    }
    (kept, rejected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resp(rater: &str, item: &str, time: f64, rationale: &str) -> SurveyResponse {
        SurveyResponse {
            response_id: format!("{rater}-{item}"),
            rater_id: rater.into(),
            item_id: item.into(),
            score: 4,
            rationale: rationale.into(),
            response_time: time,
            region_code: "CN-11".into(),
            is_attention_check: false,
            attention_pass: None,
        }
    }

    fn check(rater: &str, item: &str, pass: bool) -> SurveyResponse {
        SurveyResponse {
            is_attention_check: true,
            attention_pass: Some(pass),
            ..resp(rater, item, 5.0, "check")
        }
    }

    #[test]
    fn slow_enough_clean_rater_is_fully_kept() {
        let rows = vec![
            resp("u1", "a", 4.0, "vivid desert scenery with striking dunes"),
            resp("u1", "b", 3.0, "warm social gathering among close friends"),
            check("u1", "chk", true),
        ];
        let (kept, rejected) = quality_filter(&rows, &QualityConfig::default());
        assert_eq!(kept.len(), 2);
        assert_eq!(rejected.len(), 1);
        assert_eq!(rejected[0].reason, ResponseRejectReason::AttentionItem);
    }

    #[test]
    fn response_at_1_9s_is_rejected_for_speed() {
        let rows = vec![
            resp("u1", "a", 1.9, "vivid desert scenery with striking dunes"),
            resp("u1", "b", 2.0, "warm social gathering among close friends"),
        ];
        let (kept, rejected) = quality_filter(&rows, &QualityConfig::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].item_id, "b");
        assert_eq!(rejected[0].reason, ResponseRejectReason::Speed);
    }

    #[test]
    fn failed_attention_check_drops_the_whole_rater() {
        let rows = vec![
            resp("u1", "a", 4.0, "thoughtful words about the lake view"),
            check("u1", "chk", false),
            resp("u2", "a", 4.0, "entirely different but plausible comment"),
        ];
        let (kept, rejected) = quality_filter(&rows, &QualityConfig::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].rater_id, "u2");
        assert!(rejected
            .iter()
            .filter(|r| r.response.rater_id == "u1")
            .all(|r| r.reason == ResponseRejectReason::Attention));
    }

    #[test]
    fn repeated_word_rationales_fail_lexical_diversity() {
        let rows = vec![
            resp("u1", "a", 4.0, "good good good good good"),
            resp("u1", "b", 4.0, "good good good good"),
        ];
        let (kept, rejected) = quality_filter(&rows, &QualityConfig::default());
        assert!(kept.is_empty());
        assert!(rejected.iter().all(|r| r.reason == ResponseRejectReason::Lexical));
    }

    #[test]
    fn empty_rationales_count_as_lexical_failure() {
        let rows = vec![resp("u1", "a", 4.0, ""), resp("u1", "b", 4.0, " ")];
        let (kept, rejected) = quality_filter(&rows, &QualityConfig::default());
        assert!(kept.is_empty());
        assert!(rejected.iter().all(|r| r.reason == ResponseRejectReason::Lexical));
    }

    #[test]
    fn adding_a_rater_never_flips_anothers_status() {
        let base = vec![
            resp("u1", "a", 4.0, "vivid desert scenery with striking dunes"),
            resp("u1", "b", 1.0, "warm social gathering among friends"),
        ];
        let (kept_before, rej_before) = quality_filter(&base, &QualityConfig::default());
        let mut extended = base.clone();
        extended.push(resp("u2", "a", 4.0, "good good good good"));
        extended.push(check("u2", "chk", false));
        let (kept_after, rej_after) = quality_filter(&extended, &QualityConfig::default());
        let u1_kept_before: Vec<_> = kept_before.iter().map(|r| &r.response_id).collect();
        let u1_kept_after: Vec<_> = kept_after
            .iter()
            .filter(|r| r.rater_id == "u1")
            .map(|r| &r.response_id)
            .collect();
        assert_eq!(u1_kept_before, u1_kept_after);
        assert_eq!(
            rej_before.iter().filter(|r| r.response.rater_id == "u1").count(),
            rej_after.iter().filter(|r| r.response.rater_id == "u1").count()
        );
    }

    #[test]
    fn ttr_oracle_agreement_on_constructed_text() {
        // 6 tokens, 3 distinct -> 0.5 by direct count.
        assert_eq!(type_token_ratio("a b a c B C"), 0.5);
        assert_eq!(type_token_ratio(""), 0.0);
    }
}
