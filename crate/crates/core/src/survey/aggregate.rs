//! Ground-truth aggregation: per-item mean scores, expert overrides, and
//! stratified train/validation/holdout splits.

use super::{SurveyError, SurveyResponse};
use crate::extraction::ExpectationCategory;
use crate::hash::derive_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Aggregated ground truth for one item.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregatedItem {
    pub item_id: String,
    pub mean_score: f64,
    pub n_ratings: usize,
    /// Set when fewer than `min_raters` ratings survived the filters.
    pub under_rated: bool,
    /// Set when an expert override replaced the mean.
    pub overridden: bool,
}

/// Arithmetic mean of kept scores per item. Items under `min_raters`
/// are flagged `under_rated` rather than dropped; items with zero kept
/// responses simply do not appear (there is nothing to aggregate).
pub fn aggregate_item_scores(
    kept: &[SurveyResponse],
    min_raters: usize,
) -> BTreeMap<String, AggregatedItem> {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in kept {
        let e = sums.entry(r.item_id.as_str()).or_insert((0.0, 0));
        e.0 += f64::from(r.score);
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(item, (sum, n))| {
            (
                item.to_string(),
                AggregatedItem {
                    item_id: item.to_string(),
                    mean_score: sum / n as f64,
                    n_ratings: n,
                    under_rated: n < min_raters,
                    overridden: false,
                },
            )
        })
        .collect()
}

/// One expert-panel override (`item_id,final_score,justification`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Override {
    pub item_id: String,
    pub final_score: f64,
    pub justification: String,
}

/// Merges overrides into aggregated items, returning a log line per
/// applied override. Overrides for unknown items are reported, not
/// silently dropped.
pub fn apply_overrides(
    items: &mut BTreeMap<String, AggregatedItem>,
    overrides: &[Override],
) -> Vec<String> {
    let mut log = Vec::new();
    for o in overrides {
        match items.get_mut(&o.item_id) {
            Some(item) => {
                log.push(format!(
                    "override {}: {} -> {} ({})",
                    o.item_id, item.mean_score, o.final_score, o.justification
                ));
                item.mean_score = o.final_score;
                item.overridden = true;
            }
            None => log.push(format!("override {}: no such item, ignored", o.item_id)),
        }
    }
    log
}

/// A post entering the split, carrying its stratification category (the
/// post's dominant extracted expectation).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledPost {
    pub post_id: String,
    pub stratum: ExpectationCategory,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub holdout: Vec<String>,
}

/// Deterministic stratified partition into train/validation/holdout.
/// Per-stratum quotas follow the largest-remainder method so the global
/// counts are hit exactly; within a stratum the choice is a seeded
/// shuffle of the id-sorted members. Outputs are id-sorted.
pub fn split_corpus(
    posts: &[LabeledPost],
    counts: SplitCounts,
    seed: u64,
) -> Result<Splits, SurveyError> {
    let total = posts.len();
    if counts.train + counts.validation > total {
        return Err(SurveyError::SplitShortfall(format!(
            "requested train {} + validation {} exceeds corpus size {}",
            counts.train, counts.validation, total
        )));
    }

    let mut strata: BTreeMap<String, Vec<&LabeledPost>> = BTreeMap::new();
    for p in posts {
        strata.entry(p.stratum.token().to_string()).or_default().push(p);
    }
    for members in strata.values_mut() {
        members.sort_by(|a, b| a.post_id.cmp(&b.post_id));
    }

    // Largest-remainder quotas per stratum for a target count.
    let quotas = |target: usize, sizes: &BTreeMap<String, usize>| -> BTreeMap<String, usize> {
        let mut base: BTreeMap<String, usize> = BTreeMap::new();
        let mut remainders: Vec<(String, f64)> = Vec::new();
        let mut assigned = 0;
        for (name, &size) in sizes {
            let exact = target as f64 * size as f64 / total as f64;
            let floor = exact.floor() as usize;
            base.insert(name.clone(), floor);
            assigned += floor;
            remainders.push((name.clone(), exact - floor as f64));
        }
        remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for (name, _) in remainders.into_iter().take(target - assigned) {
            *base.get_mut(&name).unwrap() += 1;
        }
        base
    };

    let sizes: BTreeMap<String, usize> = strata.iter().map(|(k, v)| (k.clone(), v.len())).collect();
    let train_quota = quotas(counts.train, &sizes);
    let val_quota = quotas(counts.validation, &sizes);

    // Quota pairs can overshoot a small stratum; report the shortfall
    // rather than silently borrowing from another stratum.
    let mut shortfalls = Vec::new();
    for (name, &size) in &sizes {
        let want = train_quota[name] + val_quota[name];
        if want > size {
            shortfalls.push(format!("stratum {name}: need {want}, have {size}"));
        }
    }
    if !shortfalls.is_empty() {
        return Err(SurveyError::SplitShortfall(shortfalls.join("; ")));
    }

    let mut splits = Splits::default();
    for (name, members) in &strata {
        let mut shuffled: Vec<&LabeledPost> = members.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("split:{name}")));
        shuffled.shuffle(&mut rng);
        let t = train_quota[name];
        let v = val_quota[name];
        for (i, p) in shuffled.iter().enumerate() {
            if i < t {
                splits.train.push(p.post_id.clone());
            } else if i < t + v {
                splits.validation.push(p.post_id.clone());
            } else {
                splits.holdout.push(p.post_id.clone());
            }
        }
    }
    splits.train.sort();
    splits.validation.sort();
    splits.holdout.sort();
    Ok(splits)
}

/// Reads the override CSV (`item_id,final_score,justification`).
pub fn read_overrides<R: std::io::Read>(reader: R) -> Result<Vec<Override>, SurveyError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
