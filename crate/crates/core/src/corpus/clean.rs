//! Noise removal and normalization: cleaned text = raw text minus URLs,
//! emoji, and ad markers, with slang expanded from a curated lexicon.

use super::{CleanPost, CorpusError, RawPost, RemovedCounts};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::OnceLock;

/// Editable normalization data: emoji descriptors, slang expansions, and
/// the ad-marker lexicon. Shipped as a JSON file so curators can review
/// and extend it without code changes.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NormalizationTables {
    pub emoji_map: BTreeMap<String, String>,
    pub slang_map: BTreeMap<String, String>,
    pub ad_lexicon: Vec<String>,
}

impl NormalizationTables {
    pub fn from_json(json: &str) -> Result<Self, CorpusError> {
        let tables: NormalizationTables =
            serde_json::from_str(json).map_err(|e| CorpusError::BadTables(e.to_string()))?;
        tables.validate()?;
        Ok(tables)
    }

    /// Keys must be non-empty and map to non-empty replacements, and no
    /// replacement may contain a slang key as a token. The latter keeps
    /// cleaning idempotent: re-cleaning already-clean text is a no-op.
    pub fn validate(&self) -> Result<(), CorpusError> {
        for (k, v) in self.emoji_map.iter().chain(self.slang_map.iter()) {
            if k.is_empty() || v.trim().is_empty() {
                return Err(CorpusError::BadTables(format!(
                    "empty key or replacement for entry {k:?} -> {v:?}"
                )));
            }
        }
        if self.ad_lexicon.iter().any(|p| p.trim().is_empty()) {
            return Err(CorpusError::BadTables("empty ad-lexicon pattern".into()));
        }
        let slang_keys: Vec<String> = self.slang_map.keys().map(|k| k.to_lowercase()).collect();
        for v in self.emoji_map.values().chain(self.slang_map.values()) {
            for token in v.split_whitespace() {
                if slang_keys.iter().any(|k| k == &token.to_lowercase()) {
                    return Err(CorpusError::BadTables(format!(
                        "replacement {v:?} contains slang key {token:?}; cleaning would not be idempotent"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:https?://|www\.)[^\s]+").unwrap())
}

/// Returns true if text still contains something the URL rule would match.
pub fn contains_url(text: &str) -> bool {
    url_regex().is_match(text)
}

/// Emoji classification for removal/translation. Covers the pictographic
/// blocks plus joiners and variation selectors so that unmapped sequences
/// vanish cleanly rather than leaving stray modifiers behind.
fn is_emoji_char(c: char) -> bool {
    matches!(u32::from(c),
        0x1F300..=0x1F5FF   // symbols & pictographs
        | 0x1F600..=0x1F64F // emoticons
        | 0x1F680..=0x1F6FF // transport & map
        | 0x1F900..=0x1F9FF // supplemental symbols
        | 0x1FA70..=0x1FAFF // symbols & pictographs extended-A
        | 0x2600..=0x26FF   // miscellaneous symbols
        | 0x2700..=0x27BF   // dingbats
        | 0x2B00..=0x2BFF   // arrows & stars
        | 0xFE00..=0xFE0F   // variation selectors
        | 0x200D            // zero-width joiner
        | 0x1F1E6..=0x1F1FF // regional indicators
    )
}

fn is_sequence_glue(c: char) -> bool {
    matches!(u32::from(c), 0xFE00..=0xFE0F | 0x200D)
}

/// Precompiled cleaning engine for one set of tables. Construct once per
/// corpus run; `clean` is pure and safe to call from parallel workers.
pub struct TextCleaner<'a> {
    tables: &'a NormalizationTables,
    /// Emoji keys longest-first so multi-codepoint sequences win.
    emoji_keys: Vec<&'a str>,
    /// Lowercased slang key -> expansion.
    slang_lower: BTreeMap<String, &'a str>,
    /// One case-insensitive literal matcher per ad-lexicon entry.
    ad_patterns: Vec<Regex>,
}

impl<'a> TextCleaner<'a> {
    pub fn new(tables: &'a NormalizationTables) -> Self {
        let mut emoji_keys: Vec<&str> = tables.emoji_map.keys().map(|k| k.as_str()).collect();
        emoji_keys.sort_by_key(|k| std::cmp::Reverse(k.chars().count()));
        let slang_lower = tables
            .slang_map
            .iter()
            .map(|(k, v)| (k.to_lowercase(), v.as_str()))
            .collect();
        let ad_patterns = tables
            .ad_lexicon
            .iter()
            .map(|p| Regex::new(&format!("(?i){}", regex::escape(p))).unwrap())
            .collect();
        Self {
            tables,
            emoji_keys,
            slang_lower,
            ad_patterns,
        }
    }

    pub fn clean(&self, post: &RawPost) -> CleanPost {
        let mut removed = RemovedCounts::default();
        let mut rules = Vec::new();

        let text = self.strip_urls(&post.text, &mut removed, &mut rules);
        let text = self.translate_emoji(&text, &mut removed, &mut rules);
        let text = self.expand_slang(&text, &mut rules);
        let text = self.remove_ad_markers(&text, &mut removed, &mut rules);
        let text_clean = collapse_whitespace(&text);
        debug_assert!(!contains_url(&text_clean));

        CleanPost {
            id: post.id.clone(),
            text_clean,
            removed,
            normalizations_applied: rules,
        }
    }

    fn strip_urls(&self, text: &str, removed: &mut RemovedCounts, rules: &mut Vec<String>) -> String {
        let mut count = 0u32;
        let out = url_regex()
            .replace_all(text, |_: &regex::Captures| {
                count += 1;
                " "
            })
            .into_owned();
        removed.urls += count;
        if count > 0 {
            rules.push("url_strip".into());
        }
        out
    }

    /// Replaces mapped emoji with their descriptor phrase and drops
    /// unmapped emoji (counting both).
    fn translate_emoji(
        &self,
        text: &str,
        removed: &mut RemovedCounts,
        rules: &mut Vec<String>,
    ) -> String {
        let mut out = String::with_capacity(text.len());
        let mut rest = text;
        let mut mapped = 0u32;
        let mut dropped = 0u32;
        'outer: while !rest.is_empty() {
            for key in &self.emoji_keys {
                if let Some(tail) = rest.strip_prefix(key) {
                    out.push(' ');
                    out.push_str(&self.tables.emoji_map[*key]);
                    out.push(' ');
                    mapped += 1;
                    rest = tail;
                    continue 'outer;
                }
            }
            let c = rest.chars().next().unwrap();
            if is_emoji_char(c) {
                if !is_sequence_glue(c) {
                    dropped += 1;
                }
                out.push(' ');
            } else {
                out.push(c);
            }
            rest = &rest[c.len_utf8()..];
        }
        removed.emojis += mapped + dropped;
        if mapped > 0 {
            rules.push("emoji_map".into());
        }
        if dropped > 0 {
            rules.push("emoji_drop".into());
        }
        out
    }

    /// Expands slang tokens on word boundaries, case-insensitively.
    /// Single pass over the original tokens, so a replacement is never
    /// itself re-expanded within one call.
    fn expand_slang(&self, text: &str, rules: &mut Vec<String>) -> String {
        let mut expanded = false;
        let out: Vec<String> = text
            .split_whitespace()
            .map(|token| {
                let (core, trail) = split_trailing_punct(token);
                match self.slang_lower.get(&core.to_lowercase()) {
                    Some(replacement) => {
                        expanded = true;
                        format!("{replacement}{trail}")
                    }
                    None => token.to_string(),
                }
            })
            .collect();
        if expanded {
            rules.push("slang_expand".into());
        }
        out.join(" ")
    }

    fn remove_ad_markers(
        &self,
        text: &str,
        removed: &mut RemovedCounts,
        rules: &mut Vec<String>,
    ) -> String {
        let mut out = text.to_string();
        let mut hits = 0u32;
        for pattern in &self.ad_patterns {
            let mut found = 0u32;
            let next = pattern
                .replace_all(&out, |_: &regex::Captures| {
                    found += 1;
                    " "
                })
                .into_owned();
            if found > 0 {
                out = next;
                hits += found;
            }
        }
        removed.ad_markers += hits;
        if hits > 0 {
            rules.push("ad_marker_strip".into());
        }
        out
    }
}

fn split_trailing_punct(token: &str) -> (&str, &str) {
    let core_end = token
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_punctuation())
        .last()
        .map(|(i, _)| i)
        .unwrap_or(token.len());
    token.split_at(core_end)
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// One-shot convenience wrapper around [`TextCleaner`].
pub fn clean_text(post: &RawPost, tables: &NormalizationTables) -> CleanPost {
    TextCleaner::new(tables).clean(post)
}
