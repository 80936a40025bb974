//! MinHash near-duplicate detection over character 3-gram shingles.
//!
//! Each of the `k` signature slots is the minimum of an independent
//! seeded 64-bit hash over the post's shingle set (the usual permutation
//! approximation). The fraction of matching slots between two signatures
//! is an unbiased estimate of the Jaccard similarity of the shingle sets.

use super::{CleanPost, CorpusError};
use crate::hash::{fnv1a, seeded_hash};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SHINGLE_LEN: usize = 3;

/// MinHash sketch of one post's cleaned text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub post_id: String,
    pub values: Vec<u64>,
}

/// Character 3-gram shingles of lowercased text, as base hashes.
/// Lowercasing keeps Latin-script near-duplicates together; CJK text is
/// unaffected.
fn shingle_hashes(text: &str) -> Vec<u64> {
    let lowered = text.to_lowercase();
    let chars: Vec<char> = lowered.chars().collect();
    if chars.len() < SHINGLE_LEN {
        return Vec::new();
    }
    let mut out: Vec<u64> = chars
        .windows(SHINGLE_LEN)
        .map(|w| {
            let s: String = w.iter().collect();
            fnv1a(s.as_bytes())
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Computes the k-slot signature of a post. Deterministic in
/// (text_clean, seed). Errors with `degenerate_text` when the text
/// yields no shingles.
pub fn minhash_signature(post: &CleanPost, k: usize, seed: u64) -> Result<MinHashSignature, CorpusError> {
    assert!(k >= 1, "k must be >= 1");
    let shingles = shingle_hashes(&post.text_clean);
    if shingles.is_empty() {
        return Err(CorpusError::DegenerateText);
    }
    let values = (0..k as u64)
        .map(|i| {
            shingles
                .iter()
                .map(|&s| seeded_hash(s, seed, i))
                .min()
                .expect("non-empty shingle set")
        })
        .collect();
    Ok(MinHashSignature {
        post_id: post.id.clone(),
        values,
    })
}

/// Fraction of matching signature slots; estimates Jaccard similarity.
pub fn estimate_similarity(a: &MinHashSignature, b: &MinHashSignature) -> f64 {
    assert_eq!(a.values.len(), b.values.len(), "signature length mismatch");
    let matches = a
        .values
        .iter()
        .zip(b.values.iter())
        .filter(|(x, y)| x == y)
        .count();
    matches as f64 / a.values.len() as f64
}

/// One dropped post with the cluster representative it duplicated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DroppedPost {
    pub id: String,
    pub kept_id: String,
    pub estimated_similarity: f64,
}

/// Record of every near-duplicate drop in a dedup pass.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DedupLog {
    pub dropped: Vec<DroppedPost>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Collapses near-duplicate clusters (estimated Jaccard > threshold,
/// transitively) down to the post with the earliest timestamp, id as
/// tie-break. Input order does not affect the result: posts are
/// canonicalized by id before clustering and the retained list is
/// returned sorted by id.
pub fn dedup_filter(
    posts: &[CleanPost],
    timestamps: &BTreeMap<String, DateTime<Utc>>,
    signatures: &[MinHashSignature],
    threshold: f64,
) -> (Vec<CleanPost>, DedupLog) {
    assert!(threshold > 0.0 && threshold <= 1.0, "threshold must be in (0,1]");
    assert_eq!(posts.len(), signatures.len());

    // Canonical order: by id.
    let mut order: Vec<usize> = (0..posts.len()).collect();
    order.sort_by(|&a, &b| posts[a].id.cmp(&posts[b].id));
    let sigs: BTreeMap<&str, &MinHashSignature> = signatures
        .iter()
        .map(|s| (s.post_id.as_str(), s))
        .collect();

    let mut uf = UnionFind::new(order.len());
    for i in 0..order.len() {
        for j in (i + 1)..order.len() {
            let (pi, pj) = (&posts[order[i]], &posts[order[j]]);
            let est = estimate_similarity(sigs[pi.id.as_str()], sigs[pj.id.as_str()]);
            if est > threshold {
                uf.union(i, j);
            }
        }
    }

    // Pick the survivor per cluster: earliest timestamp, then smallest id.
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..order.len() {
        clusters.entry(uf.find(i)).or_default().push(i);
    }

    let mut retained = Vec::new();
    let mut log = DedupLog::default();
    for members in clusters.values() {
        let survivor = *members
            .iter()
            .min_by_key(|&&i| {
                let p = &posts[order[i]];
                (timestamps.get(&p.id).copied(), p.id.clone())
            })
            .expect("cluster not empty");
        let kept = &posts[order[survivor]];
        retained.push(kept.clone());
        for &m in members {
            if m != survivor {
                let dropped = &posts[order[m]];
                log.dropped.push(DroppedPost {
                    id: dropped.id.clone(),
                    kept_id: kept.id.clone(),
                    estimated_similarity: estimate_similarity(
                        sigs[dropped.id.as_str()],
                        sigs[kept.id.as_str()],
                    ),
                });
            }
        }
    }
    retained.sort_by(|a, b| a.id.cmp(&b.id));
    log.dropped.sort_by(|a, b| a.id.cmp(&b.id));
    (retained, log)
}
