//! Prompt construction, reply parsing, and per-post extraction.

use super::mock::{count_occurrences, ReplyItem, POST_OPEN};
use super::provider::{with_retries, Provider, ProviderConfig, ProviderError, ProviderRequest};
use super::{ExpectationCategory, ExtractionError, ExtractionItem, ExtractionResult, SynonymTable};
use crate::corpus::{CleanPost, RawPost};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Chain-of-thought prompt structured as a context / expectation-category
/// / rationale triple. In the unsupervised phase the category slot is
/// empty and the model is asked to discover categories itself.
#[derive(Debug, Clone)]
pub struct PromptTriple {
    pub context: String,
    pub category: Option<ExpectationCategory>,
    pub rationale_slot: String,
}

/// Character budget for a rendered prompt; contexts are truncated (on a
/// char boundary) to stay under it.
pub const PROMPT_CHAR_BUDGET: usize = 4000;

impl PromptTriple {
    /// Builds the unsupervised-phase prompt for one post. The context is
    /// the cleaned text plus a digest of its engagement metadata.
    pub fn for_post(post: &CleanPost, raw: Option<&RawPost>) -> Self {
        let digest = raw
            .map(|r| {
                format!(
                    "likes={} comments={} platform={:?}",
                    r.likes.unwrap_or(0),
                    r.comments.unwrap_or(0),
                    r.platform
                )
            })
            .unwrap_or_else(|| "metadata unavailable".into());
        Self {
            context: format!("{}\n[{}]", post.text_clean, digest),
            category: None,
            rationale_slot: "For each expectation, explain the inference in one sentence.".into(),
        }
    }

    /// Renders the prompt text sent to the provider. The post context is
    /// framed in triple quotes; the reply schema is stated explicitly.
    pub fn render(&self) -> String {
        let mut context = self.context.clone();
        if context.chars().count() > PROMPT_CHAR_BUDGET {
            context = context.chars().take(PROMPT_CHAR_BUDGET).collect();
        }
        let category_line = match &self.category {
            Some(c) => format!("Focus on the expectation category: {c}.\n"),
            None => String::from(
                "Please analyze the destination expectations contained in this text.\n",
            ),
        };
        format!(
            "{category_line}{POST_OPEN}{context}{POST_OPEN}\n{}\nReply with a JSON array of \
             objects with keys \"label\", \"category\", \"expression\", \"inference\", \"score\" \
             (integer 1-7). Reply [] if the text expresses no destination expectation.",
            self.rationale_slot
        )
    }
}

/// Strips optional markdown code fences around a JSON reply.
fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    let t = t.strip_prefix("```json").or_else(|| t.strip_prefix("```")).unwrap_or(t);
    let t = t.strip_suffix("```").unwrap_or(t);
    t.trim()
}

fn words(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Converts reply items into extraction items: maps labels to categories
/// through the synonym table, computes evidence word counts and content
/// shares, and clamps scores into 1..=7.
///
/// `word_count` counts the words of each matched expression occurrence
/// in the cleaned text (falling back to the expression's own length when
/// the provider paraphrased); `content_pct` divides by a denominator
/// that keeps the per-post total at or under 1.
fn to_extraction_items(
    post: &CleanPost,
    reply_items: Vec<ReplyItem>,
    synonyms: &SynonymTable,
) -> Vec<ExtractionItem> {
    let lowered = post.text_clean.to_lowercase();
    let total_words = words(&post.text_clean);

    let counted: Vec<(ReplyItem, usize)> = reply_items
        .into_iter()
        .map(|item| {
            let wc: usize = item
                .expression
                .split(';')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|phrase| {
                    let occurrences = count_occurrences(&lowered, &phrase.to_lowercase());
                    words(phrase) * occurrences.max(1)
                })
                .sum();
            (item, wc)
        })
        .collect();

    let denom = counted.iter().map(|(_, wc)| wc).sum::<usize>().max(total_words).max(1);
    counted
        .into_iter()
        .map(|(item, wc)| ExtractionItem {
            mapped_category: synonyms.map_label(&item.label, Some(&item.category)),
            raw_label: item.label,
            expression: item.expression,
            inference: item.inference,
            word_count: wc,
            content_pct: wc as f64 / denom as f64,
            provisional_score: item.score.clamp(1, 7),
        })
        .collect()
}

/// Extracts the latent expectations of one post through the provider.
/// Transport failures and malformed replies are retried up to
/// `cfg.max_retries`; the post is marked unextracted (error) only after
/// retries are exhausted.
pub fn extract_expectations(
    post: &CleanPost,
    raw: Option<&RawPost>,
    provider: &dyn Provider,
    cfg: &ProviderConfig,
    synonyms: &SynonymTable,
) -> Result<ExtractionResult, ExtractionError> {
    let prompt = PromptTriple::for_post(post, raw).render();
    let request = ProviderRequest {
        model: cfg.model_name.clone(),
        prompt,
        temperature: cfg.temperature,
        seed: cfg.request_seed,
    };

    let reply_items = with_retries(cfg.max_retries, || {
        let reply = provider.complete(&request)?;
        serde_json::from_str::<Vec<ReplyItem>>(strip_fences(&reply.text))
            .map_err(|e| ProviderError::Malformed(e.to_string()))
    })
    .map_err(|e| match e {
        ProviderError::Transport(msg) => ExtractionError::ProviderUnavailable(msg),
        ProviderError::Malformed(msg) => ExtractionError::MalformedResponse(msg),
    })?;

    Ok(ExtractionResult {
        post_id: post.id.clone(),
        items: to_extraction_items(post, reply_items, synonyms),
    })
}

/// Outcome of a corpus pass: results sorted by post id, plus the posts
/// that stayed unextracted after retries.
#[derive(Debug, Default)]
pub struct CorpusExtraction {
    pub results: Vec<ExtractionResult>,
    pub failures: Vec<(String, String)>,
}

/// Extracts a whole corpus with at most `in_flight` concurrent provider
/// calls. Results are aggregated order-independently and sorted by post
/// id, so the output is identical for any concurrency level.
pub fn extract_corpus(
    posts: &[(CleanPost, Option<RawPost>)],
    provider: &dyn Provider,
    cfg: &ProviderConfig,
    synonyms: &SynonymTable,
    in_flight: usize,
) -> CorpusExtraction {
    let in_flight = in_flight.max(1).min(posts.len().max(1));
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::new());
    let failures = Mutex::new(Vec::new());

    std::thread::scope(|scope| {
        for _ in 0..in_flight {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= posts.len() {
                    break;
                }
                let (post, raw) = &posts[i];
                match extract_expectations(post, raw.as_ref(), provider, cfg, synonyms) {
                    Ok(r) => results.lock().unwrap().push(r),
                    Err(e) => failures.lock().unwrap().push((post.id.clone(), e.to_string())),
                }
            });
        }
    });

    let mut out = CorpusExtraction {
        results: results.into_inner().unwrap(),
        failures: failures.into_inner().unwrap(),
    };
    out.results.sort_by(|a, b| a.post_id.cmp(&b.post_id));
    out.failures.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::super::mock::{MockLexicon, MockProvider};
    use super::super::provider::FlakyProvider;
    use super::*;
    use crate::corpus::RemovedCounts;

    fn clean(id: &str, text: &str) -> CleanPost {
        CleanPost {
            id: id.into(),
            text_clean: text.into(),
            removed: RemovedCounts::default(),
            normalizations_applied: vec![],
        }
    }

    fn lexicon() -> MockLexicon {
        MockLexicon::from_json(
            r#"{"entries": [
                {"category": "Natural", "label": "Unique Natural Scenery", "score": 7,
                 "phrases": ["tengger desert", "most beautiful deserts"]},
                {"category": "Emotional", "label": "Romantic Experience", "score": 7,
                 "phrases": ["someone special", "with loved one"]},
                {"category": "Leisure", "label": "Relaxation & Comfort", "score": 4,
                 "phrases": ["night market", "comfort"]}
            ]}"#,
        )
        .unwrap()
    }

    fn synonyms() -> SynonymTable {
        SynonymTable::from_json(
            r#"{"Romantic Experience": "Emotional", "Unique Natural Scenery": "Natural",
                "Relaxation & Comfort": "Leisure"}"#,
        )
        .unwrap()
    }

    #[test]
    fn tengger_desert_maps_to_natural_scenery_7() {
        let mock = MockProvider::new(lexicon());
        let post = clean("t1", "Tengger Desert, one of the six most beautiful deserts in China");
        let result =
            extract_expectations(&post, None, &mock, &ProviderConfig::default(), &synonyms())
                .unwrap();
        let item = result
            .items
            .iter()
            .find(|i| i.raw_label == "Unique Natural Scenery")
            .expect("natural scenery item");
        assert_eq!(item.mapped_category, ExpectationCategory::Natural);
        assert_eq!(item.provisional_score, 7);
    }

    #[test]
    fn someone_special_maps_to_romantic_emotional_7() {
        let mock = MockProvider::new(lexicon());
        let post = clean("t2", "Experience the desert with someone special");
        let result =
            extract_expectations(&post, None, &mock, &ProviderConfig::default(), &synonyms())
                .unwrap();
        let item = result
            .items
            .iter()
            .find(|i| i.raw_label == "Romantic Experience")
            .expect("romantic item");
        assert_eq!(item.mapped_category, ExpectationCategory::Emotional);
        assert_eq!(item.provisional_score, 7);
    }

    #[test]
    fn no_signal_text_yields_no_items() {
        let mock = MockProvider::new(lexicon());
        let post = clean("t3", "I ate lunch.");
        let result =
            extract_expectations(&post, None, &mock, &ProviderConfig::default(), &synonyms())
                .unwrap();
        assert!(result.items.is_empty());
    }

    #[test]
    fn content_pct_sums_to_at_most_one() {
        let mock = MockProvider::new(lexicon());
        let post = clean(
            "t4",
            "night market night market comfort with someone special tengger desert",
        );
        let result =
            extract_expectations(&post, None, &mock, &ProviderConfig::default(), &synonyms())
                .unwrap();
        assert!(!result.items.is_empty());
        let total: f64 = result.items.iter().map(|i| i.content_pct).sum();
        assert!(total <= 1.0 + 1e-12, "content_pct sum {total}");
        assert!(result.items.iter().all(|i| (1..=7).contains(&i.provisional_score)));
    }

    #[test]
    fn flaky_provider_result_equals_immediate_result() {
        let post = clean("t5", "Experience the desert with someone special");
        let cfg = ProviderConfig {
            max_retries: 3,
            ..Default::default()
        };
        let immediate = MockProvider::new(lexicon());
        let flaky = FlakyProvider::new(MockProvider::new(lexicon()), 3);
        let a = extract_expectations(&post, None, &immediate, &cfg, &synonyms()).unwrap();
        let b = extract_expectations(&post, None, &flaky, &cfg, &synonyms()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn exhausted_retries_mark_provider_unavailable() {
        let post = clean("t6", "Experience the desert with someone special");
        let cfg = ProviderConfig {
            max_retries: 1,
            ..Default::default()
        };
        let flaky = FlakyProvider::new(MockProvider::new(lexicon()), 10);
        let err = extract_expectations(&post, None, &flaky, &cfg, &synonyms()).unwrap_err();
        assert!(matches!(err, ExtractionError::ProviderUnavailable(_)));
    }

    #[test]
    fn corpus_extraction_is_concurrency_invariant() {
        let posts: Vec<(CleanPost, Option<RawPost>)> = (0..24)
            .map(|i| {
                let text = match i % 3 {
                    0 => "a stroll through the night market in comfort",
                    1 => "tengger desert with someone special",
                    _ => "nothing related at all",
                };
                (clean(&format!("p{i:02}"), text), None)
            })
            .collect();
        let mock = MockProvider::new(lexicon());
        let cfg = ProviderConfig::default();
        let syn = synonyms();
        let one = extract_corpus(&posts, &mock, &cfg, &syn, 1);
        let eight = extract_corpus(&posts, &mock, &cfg, &syn, 8);
        assert_eq!(
            serde_json::to_string(&one.results).unwrap(),
            serde_json::to_string(&eight.results).unwrap()
        );
    }
}
