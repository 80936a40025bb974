//! Inclusion filtering: narrative depth, engagement metadata, and
//! non-commercial intent.

use super::{CleanPost, RawPost, RejectReason};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Minimum cleaned-text length in Unicode scalar values.
    pub min_chars: usize,
    /// Ad-lexicon hit count at or above which a post is commercial.
    pub ad_hit_threshold: u32,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_chars: 50,
            ad_hit_threshold: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Reject(RejectReason),
}

/// Total function over cleaned posts: every input is either kept or
/// rejected with a machine-readable reason. Check order fixes which
/// reason wins when several apply: emptiness, then commercial intent,
/// then engagement metadata, then length.
pub fn inclusion_filter(clean: &CleanPost, raw: &RawPost, cfg: &FilterConfig) -> Verdict {
    if clean.text_clean.is_empty() {
        return Verdict::Reject(RejectReason::EmptyClean);
    }
    if raw.sponsored_hint == Some(true) || clean.removed.ad_markers >= cfg.ad_hit_threshold {
        return Verdict::Reject(RejectReason::Commercial);
    }
    if raw.likes.is_none() || raw.comments.is_none() {
        return Verdict::Reject(RejectReason::MissingEngagement);
    }
    if clean.char_len() < cfg.min_chars {
        return Verdict::Reject(RejectReason::TooShort);
    }
    Verdict::Keep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Platform, RemovedCounts};
    use chrono::TimeZone;

    fn raw(likes: Option<u64>, comments: Option<u64>, sponsored: Option<bool>) -> RawPost {
        RawPost {
            id: "p".into(),
            platform: Platform::Xiaohongshu,
            text: "irrelevant".into(),
            timestamp: chrono::Utc.with_ymd_and_hms(2020, 6, 1, 0, 0, 0).unwrap(),
            likes,
            comments,
            hashtags: vec![],
            geotag: None,
            sponsored_hint: sponsored,
        }
    }

    fn clean_of_len(n: usize, ad_markers: u32) -> CleanPost {
        CleanPost {
            id: "p".into(),
            text_clean: "x".repeat(n),
            removed: RemovedCounts {
                urls: 0,
                emojis: 0,
                ad_markers,
            },
            normalizations_applied: vec![],
        }
    }

    #[test]
    fn rejects_forty_nine_chars() {
        let v = inclusion_filter(&clean_of_len(49, 0), &raw(Some(3), Some(0), None), &Default::default());
        assert_eq!(v, Verdict::Reject(RejectReason::TooShort));
    }

    #[test]
    fn keeps_fifty_chars_with_engagement() {
        let v = inclusion_filter(&clean_of_len(50, 0), &raw(Some(3), Some(0), None), &Default::default());
        assert_eq!(v, Verdict::Keep);
    }

    #[test]
    fn fifty_cjk_chars_count_as_scalars_not_bytes() {
        let clean = CleanPost {
            id: "p".into(),
            text_clean: "漠".repeat(50),
            removed: RemovedCounts::default(),
            normalizations_applied: vec![],
        };
        let v = inclusion_filter(&clean, &raw(Some(1), Some(1), None), &Default::default());
        assert_eq!(v, Verdict::Keep);
    }

    #[test]
    fn rejects_missing_engagement_metadata() {
        let v = inclusion_filter(&clean_of_len(80, 0), &raw(None, Some(2), None), &Default::default());
        assert_eq!(v, Verdict::Reject(RejectReason::MissingEngagement));
        let v = inclusion_filter(&clean_of_len(80, 0), &raw(Some(2), None, None), &Default::default());
        assert_eq!(v, Verdict::Reject(RejectReason::MissingEngagement));
    }

    #[test]
    fn rejects_two_ad_hits_as_commercial() {
        let v = inclusion_filter(&clean_of_len(80, 2), &raw(Some(3), Some(1), None), &Default::default());
        assert_eq!(v, Verdict::Reject(RejectReason::Commercial));
        // A single hit is tolerated.
        let v = inclusion_filter(&clean_of_len(80, 1), &raw(Some(3), Some(1), None), &Default::default());
        assert_eq!(v, Verdict::Keep);
    }

    #[test]
    fn rejects_sponsored_hint() {
        let v = inclusion_filter(&clean_of_len(80, 0), &raw(Some(3), Some(1), Some(true)), &Default::default());
        assert_eq!(v, Verdict::Reject(RejectReason::Commercial));
    }

    #[test]
    fn rejects_empty_clean_first() {
        let v = inclusion_filter(&clean_of_len(0, 5), &raw(None, None, Some(true)), &Default::default());
        assert_eq!(v, Verdict::Reject(RejectReason::EmptyClean));
    }
}
