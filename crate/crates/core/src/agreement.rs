//! Bland-Altman concordance between model-generated and human scores.
//!
//! Differences are model minus human. Limits of agreement are the mean
//! difference plus/minus z times its sample standard deviation; with the
//! default z = 1.96 roughly 95% of differences should fall inside them
//! when the differences are normal.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgreementError {
    #[error("need at least 2 common items, got {0}")]
    TooFewPairs(usize),
}

/// One paired observation for plotting: difference against pair mean.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementPair {
    pub item_id: String,
    pub mean_of_pair: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementReport {
    /// Sign convention: diff = model score − human score.
    pub diff_convention: String,
    pub n: usize,
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub loa_low: f64,
    pub loa_high: f64,
    pub pct_within_loa: f64,
    /// True when sd_diff is zero and the limits collapse onto the mean.
    pub degenerate: bool,
    pub pairs: Vec<AgreementPair>,
    /// Items present in only one input; never imputed.
    pub unmatched_model: Vec<String>,
    pub unmatched_human: Vec<String>,
}

/// Bland-Altman analysis over the key intersection of the two score maps.
pub fn bland_altman(
    model_scores: &BTreeMap<String, f64>,
    human_scores: &BTreeMap<String, f64>,
    z: f64,
) -> Result<AgreementReport, AgreementError> {
    let mut pairs: Vec<AgreementPair> = Vec::new();
    for (item, &m) in model_scores {
        if let Some(&h) = human_scores.get(item) {
            pairs.push(AgreementPair {
                item_id: item.clone(),
                mean_of_pair: (m + h) / 2.0,
                diff: m - h,
            });
        }
    }
    let n = pairs.len();
    if n < 2 {
        return Err(AgreementError::TooFewPairs(n));
    }

    let mean_diff = pairs.iter().map(|p| p.diff).sum::<f64>() / n as f64;
    let ss = pairs
        .iter()
        .map(|p| (p.diff - mean_diff).powi(2))
        .sum::<f64>();
    let sd_diff = (ss / (n - 1) as f64).sqrt();
    let degenerate = sd_diff == 0.0;
    let (loa_low, loa_high) = (mean_diff - z * sd_diff, mean_diff + z * sd_diff);
    let within = pairs
        .iter()
        .filter(|p| p.diff >= loa_low && p.diff <= loa_high)
        .count();

    let unmatched_model = model_scores
        .keys()
        .filter(|k| !human_scores.contains_key(*k))
        .cloned()
        .collect();
    let unmatched_human = human_scores
        .keys()
        .filter(|k| !model_scores.contains_key(*k))
        .cloned()
        .collect();

    Ok(AgreementReport {
        diff_convention: "model_minus_human".into(),
        n,
        mean_diff,
        sd_diff,
        loa_low,
        loa_high,
        pct_within_loa: within as f64 / n as f64,
        degenerate,
        pairs,
        unmatched_model,
        unmatched_human,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
        entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn identical_inputs_are_degenerate_with_zero_limits() {
        let m = scores(&[("a", 5.0), ("b", 3.0), ("c", 6.0)]);
        let r = bland_altman(&m, &m, 1.96).unwrap();
        assert_eq!(r.mean_diff, 0.0);
        assert_eq!(r.sd_diff, 0.0);
        assert_eq!((r.loa_low, r.loa_high), (0.0, 0.0));
        assert!(r.degenerate);
        assert_eq!(r.pct_within_loa, 1.0);
    }

    #[test]
    fn hand_computed_alternating_diffs() {
        // diffs {1,-1,1,-1}: mean 0, sd sqrt(4/3), LoA ±1.96*sqrt(4/3).
        let m = scores(&[("a", 2.0), ("b", 2.0), ("c", 2.0), ("d", 2.0)]);
        let h = scores(&[("a", 1.0), ("b", 3.0), ("c", 1.0), ("d", 3.0)]);
        let r = bland_altman(&m, &h, 1.96).unwrap();
        assert!((r.mean_diff - 0.0).abs() < 1e-12);
        assert!((r.sd_diff - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((r.loa_high - 2.2632).abs() < 1e-4);
        assert!((r.loa_low + 2.2632).abs() < 1e-4);
    }

    #[test]
    fn fewer_than_two_common_items_is_an_error() {
        let m = scores(&[("a", 1.0), ("x", 2.0)]);
        let h = scores(&[("a", 1.0), ("y", 2.0)]);
        let err = bland_altman(&m, &h, 1.96).unwrap_err();
        assert!(matches!(err, AgreementError::TooFewPairs(1)));
    }

    #[test]
    fn unmatched_items_are_listed_not_imputed() {
        let m = scores(&[("a", 1.0), ("b", 2.0), ("only_m", 9.0)]);
        let h = scores(&[("a", 1.5), ("b", 2.5), ("only_h", 9.0)]);
        let r = bland_altman(&m, &h, 1.96).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.unmatched_model, vec!["only_m".to_string()]);
        assert_eq!(r.unmatched_human, vec!["only_h".to_string()]);
    }

    #[test]
    fn swapping_inputs_negates_mean_and_limits() {
        let m = scores(&[("a", 5.0), ("b", 2.0), ("c", 7.0), ("d", 4.0)]);
        let h = scores(&[("a", 4.0), ("b", 3.5), ("c", 6.0), ("d", 4.5)]);
        let fwd = bland_altman(&m, &h, 1.96).unwrap();
        let rev = bland_altman(&h, &m, 1.96).unwrap();
        assert!((fwd.mean_diff + rev.mean_diff).abs() < 1e-12);
        assert!((fwd.sd_diff - rev.sd_diff).abs() < 1e-12);
        assert!((fwd.loa_low + rev.loa_high).abs() < 1e-12);
        assert!((fwd.loa_high + rev.loa_low).abs() < 1e-12);
        assert_eq!(fwd.pct_within_loa, rev.pct_within_loa);
    }

    #[test]
    fn shifting_model_scores_shifts_mean_not_sd() {
        let m = scores(&[("a", 5.0), ("b", 2.0), ("c", 7.0), ("d", 4.0)]);
        let h = scores(&[("a", 4.0), ("b", 3.5), ("c", 6.0), ("d", 4.5)]);
        let base = bland_altman(&m, &h, 1.96).unwrap();
        let shifted: BTreeMap<String, f64> =
            m.iter().map(|(k, v)| (k.clone(), v + 2.5)).collect();
        let r = bland_altman(&shifted, &h, 1.96).unwrap();
        assert!((r.mean_diff - (base.mean_diff + 2.5)).abs() < 1e-12);
        assert!((r.sd_diff - base.sd_diff).abs() < 1e-12);
        assert!((r.loa_low - (base.loa_low + 2.5)).abs() < 1e-12);
        assert!((r.loa_high - (base.loa_high + 2.5)).abs() < 1e-12);
    }

    #[test]
    fn pct_within_recomputable_from_pairs() {
        let m = scores(&[("a", 5.0), ("b", 2.0), ("c", 7.0), ("d", 4.0), ("e", 1.0)]);
        let h = scores(&[("a", 4.0), ("b", 3.5), ("c", 6.0), ("d", 4.5), ("e", 6.0)]);
        let r = bland_altman(&m, &h, 1.96).unwrap();
        let recount = r
            .pairs
            .iter()
            .filter(|p| p.diff >= r.loa_low && p.diff <= r.loa_high)
            .count();
        assert_eq!(recount as f64 / r.n as f64, r.pct_within_loa);
    }
}
