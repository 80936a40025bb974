//! Corpus-level Top-k consolidation of extracted categories.

use super::{ExpectationCategory, ExtractionResult};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One consolidated category with its corpus statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRank {
    pub category: ExpectationCategory,
    /// Document frequency: number of posts mentioning the category.
    pub frequency: usize,
    /// frequency / total mentions across all categories.
    pub share: f64,
    /// Secondary statistic: the category's share of evidence word count.
    pub word_count_share: f64,
}

/// Ranks categories by descending document frequency, with word-count
/// share as the secondary key and category name as the final tie-break.
/// Returns at most `k` entries; shares are computed over all categories,
/// so the reported shares sum to at most 1.
pub fn consolidate_topk(results: &[ExtractionResult], k: usize) -> Vec<CategoryRank> {
    assert!(k >= 1, "k must be >= 1");
    let mut freq: BTreeMap<ExpectationCategory, usize> = BTreeMap::new();
    let mut word_counts: BTreeMap<ExpectationCategory, usize> = BTreeMap::new();
    for result in results {
        let mut seen: Vec<&ExpectationCategory> = Vec::new();
        for item in &result.items {
            *word_counts.entry(item.mapped_category.clone()).or_default() += item.word_count;
            if !seen.contains(&&item.mapped_category) {
                seen.push(&item.mapped_category);
                *freq.entry(item.mapped_category.clone()).or_default() += 1;
            }
        }
    }

    let total_mentions: usize = freq.values().sum();
    let total_words: usize = word_counts.values().sum();
    if total_mentions == 0 {
        return Vec::new();
    }

    let mut ranks: Vec<CategoryRank> = freq
        .into_iter()
        .map(|(category, frequency)| CategoryRank {
            share: frequency as f64 / total_mentions as f64,
            word_count_share: if total_words == 0 {
                0.0
            } else {
                word_counts[&category] as f64 / total_words as f64
            },
            category,
            frequency,
        })
        .collect();

    ranks.sort_by(|a, b| {
        b.frequency
            .cmp(&a.frequency)
            .then(b.word_count_share.partial_cmp(&a.word_count_share).unwrap())
            .then(a.category.token().cmp(b.category.token()))
    });
    ranks.truncate(k);
    ranks
}
