//! Regenerates the bundled synthetic fixtures under `data/`:
//! a 200-post corpus, a crowdsourced response file, and the pipeline
//! config that ties them together. Fully deterministic.
//!
//! Run from the workspace root: `cargo run -p expect-cli --example gen_fixtures`

use expect_core::corpus::{ingest_corpus, IngestConfig, NormalizationTables, Platform, RawPost};
use expect_core::extraction::{ExpectationCategory, MockLexicon, MockProvider};
use expect_core::survey::item_id;
use chrono::TimeZone;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::Path;

const LEXICON_JSON: &str = include_str!("../assets/mock_lexicon.json");
const TABLES_JSON: &str = include_str!("../assets/tables.json");

const FILLER: &[&str] = &[
    "we set out before dawn and the road curved through quiet villages",
    "the itinerary left plenty of room for detours and long pauses",
    "locals pointed us to corners no guidebook had bothered to mention",
    "by the third day the trip had settled into its own gentle rhythm",
    "every stop added another page to the travel journal",
    "the weather held and the light stayed soft all afternoon",
    "we planned this route for months and it still surprised us",
    "nothing about the schedule felt rushed which made all the difference",
];

const RATIONALE_POOL: &[&str] = &[
    "the", "post", "clearly", "expresses", "a", "strong", "desire", "for", "this", "kind",
    "of", "travel", "experience", "with", "vivid", "wording", "about", "scenery", "food",
    "companions", "culture", "comfort", "stars", "sunrise", "markets", "architecture",
    "romantic", "tone", "anticipation", "plans", "sharing", "photos", "friends", "family",
    "budget", "unique", "calm", "lively", "warm", "genuine", "detailed", "evocative",
    "author", "longs", "openly", "describes", "imagery", "suggests", "mentions", "hints",
    "wants", "visit", "landscape", "dunes", "night", "market", "temple", "pagoda", "lake",
    "mountain", "snack", "stall", "homestay", "room", "view", "trip", "journey", "route",
    "season", "spring", "summer", "autumn", "winter", "festival", "crowd", "quiet", "noisy",
    "bright", "golden", "soft", "light", "color", "texture", "feeling", "mood", "energy",
    "eager", "excited", "hopeful", "curious", "nostalgic", "relaxed", "restful", "slow",
];

fn phrases_for(lexicon: &MockLexicon, category: &ExpectationCategory) -> Vec<String> {
    lexicon
        .entries
        .iter()
        .filter(|e| &e.category == category)
        .flat_map(|e| e.phrases.iter().cloned())
        .collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn main() {
    let out_dir = Path::new("data");
    std::fs::create_dir_all(out_dir).expect("create data dir");
    let lexicon = MockLexicon::from_json(LEXICON_JSON).expect("lexicon parses");
    let tables = NormalizationTables::from_json(TABLES_JSON).expect("tables parse");
    let mut rng = ChaCha8Rng::seed_from_u64(20210607);

    let categories = ExpectationCategory::NAMED;
    let emoji: Vec<&str> = ["😍", "🌅", "🏜️", "✨", "🍜", "📸"].to_vec();
    let mut posts: Vec<RawPost> = Vec::new();
    let make_post = |id: usize, text: String, likes: Option<u64>, comments: Option<u64>,
                         sponsored: Option<bool>, rng: &mut ChaCha8Rng| RawPost {
        id: format!("p{id:04}"),
        platform: if rng.gen_bool(0.6) { Platform::Weibo } else { Platform::Xiaohongshu },
        text,
        timestamp: chrono::Utc
            .with_ymd_and_hms(
                2019 + (id % 3) as i32,
                1 + (id % 12) as u32,
                1 + (id % 28) as u32,
                (id % 24) as u32,
                (id * 7 % 60) as u32,
                0,
            )
            .unwrap(),
        likes,
        comments,
        hashtags: vec!["#TravelGoals".into()],
        geotag: if rng.gen_bool(0.5) {
            Some((30.0 + rng.gen_range(-5.0..15.0), 100.0 + rng.gen_range(-10.0..20.0)))
        } else {
            None
        },
        sponsored_hint: sponsored,
    };

    // 170 ordinary posts with category signal.
    let mock = MockProvider::new(lexicon.clone());
    for id in 0..170 {
        // Post richness varies from terse single-theme notes to posts
        // touching every expectation; the shared richness factor is what
        // makes the five questionnaire sub-scores internally consistent.
        let n_cats = rng.gen_range(1..=5);
        let mut cats: Vec<&ExpectationCategory> = categories.iter().collect();
        cats.shuffle(&mut rng);
        let mut body = String::new();
        for cat in cats.iter().take(n_cats) {
            let pool = phrases_for(&lexicon, cat);
            let phrase = pool[rng.gen_range(0..pool.len())].clone();
            let filler = FILLER[rng.gen_range(0..FILLER.len())];
            let _ = write!(body, "{filler}, {phrase}. ");
        }
        if rng.gen_bool(0.12) {
            let _ = write!(body, "{} ", emoji[rng.gen_range(0..emoji.len())]);
        }
        if rng.gen_bool(0.08) {
            body.push_str("yyds ");
        }
        if rng.gen_bool(0.06) {
            body.push_str("details at http://trip.example/notes ");
        }
        // Engagement driven by leisure/social signal plus noise.
        let items = mock.analyze(&body);
        let intensity = |token: &str| -> f64 {
            items
                .iter()
                .filter(|i| i.category == token)
                .map(|i| f64::from(i.score))
                .fold(0.0, f64::max)
        };
        let raw = 250.0
            + 70.0 * intensity("Leisure")
            + 50.0 * intensity("Social")
            + 12.0 * intensity("Natural")
            - 10.0 * intensity("Emotional")
            + 8.0 * intensity("ExoticCultural")
            + 80.0 * normal(&mut rng);
        let likes = raw.max(0.0).round() as u64;
        let comments = (likes / 10).max(1) + rng.gen_range(0..20);
        let post = make_post(id, body, Some(likes), Some(comments), None, &mut rng);
        posts.push(post);
    }

    // 6 too-short posts.
    for id in 170..176 {
        let post = make_post(id, "lovely trip".into(), Some(12), Some(2), None, &mut rng);
        posts.push(post);
    }
    // 5 commercial posts (sponsored hint or stacked ad markers).
    for id in 176..181 {
        let text = if id % 2 == 0 {
            format!(
                "{} promo code SAVE{} and click the link for the group buy deal today",
                FILLER[id % FILLER.len()],
                id
            )
        } else {
            format!("{} honest thoughts after a hosted stay at the dune camp resort", FILLER[id % FILLER.len()])
        };
        let sponsored = if id % 2 == 0 { None } else { Some(true) };
        let post = make_post(id, text, Some(40), Some(4), sponsored, &mut rng);
        posts.push(post);
    }
    // 3 posts missing engagement metadata.
    for id in 181..184 {
        let text = format!(
            "{} the endless dunes were stunning scenery and worth sharing with friends",
            FILLER[id % FILLER.len()]
        );
        let post = make_post(id, text, None, None, None, &mut rng);
        posts.push(post);
    }
    // Near-duplicate clusters: 3 pairs, one triple, plus 2 exact copies.
    let dup_bases = [
        "watching the sunrise from the cold ridge was worth every step of the climb, a sky full of stars the night before",
        "the night market food stalls served local snacks until two in the morning and we tried nearly all of them",
        "golden pagodas of the old town glow at dusk and the ethnic costumes made the festival feel like another country",
    ];
    let mut id = 184;
    for base in dup_bases {
        for (suffix, likes) in [("", 520u64), (" truly", 410)] {
            let post = make_post(id, format!("{base}{suffix}"), Some(likes), Some(25), None, &mut rng);
            posts.push(post);
            id += 1;
        }
    }
    let triple_base = "experience the desert with someone special, endless dunes and a sunrise that turns the sky red";
    for (suffix, likes) in [("", 700u64), (" again", 650), (" soon", 600)] {
        let post = make_post(id, format!("{triple_base}{suffix}"), Some(likes), Some(40), None, &mut rng);
        posts.push(post);
        id += 1;
    }
    for likes in [330u64, 300] {
        let post = make_post(
            id,
            "wandering the night market in comfort with my friends, local snacks in hand and a photo for the feed"
                .into(),
            Some(likes),
            Some(18),
            None,
            &mut rng,
        );
        posts.push(post);
        id += 1;
    }
    // Pad to exactly 200 with plain no-signal posts.
    while posts.len() < 200 {
        let text = format!(
            "{} administrative notes about packing lists and timetables for the spring",
            FILLER[posts.len() % FILLER.len()]
        );
        let post = make_post(id, text, Some(rng.gen_range(5..80)), Some(3), None, &mut rng);
        posts.push(post);
        id += 1;
    }
    assert_eq!(posts.len(), 200);

    let mut corpus = String::new();
    for p in &posts {
        corpus.push_str(&serde_json::to_string(p).unwrap());
        corpus.push('\n');
    }
    std::fs::write(out_dir.join("corpus.jsonl"), &corpus).expect("write corpus");

    // Survey responses over the first 60 retained posts.
    let ingest_cfg = IngestConfig {
        minhash_seed: 1,
        ..Default::default()
    };
    let outcome = ingest_corpus(&posts, &tables, &ingest_cfg).expect("ingest");
    let surveyed: Vec<_> = outcome.kept.iter().take(60).collect();
    println!(
        "corpus: {} posts, {} retained, {} surveyed",
        posts.len(),
        outcome.kept.len(),
        surveyed.len()
    );

    let mut csv = String::from(
        "response_id,rater_id,item_id,score,rationale,response_time,region_code,is_attention_check,attention_pass\n",
    );
    let mut resp_id = 0usize;
    let push_row = |csv: &mut String, rater: &str, item: &str, score: u8, rationale: &str,
                        time: f64, check: bool, pass: Option<bool>, resp_id: &mut usize| {
        let pass_str = match pass {
            None => "",
            Some(true) => "true",
            Some(false) => "false",
        };
        csv.push_str(&format!(
            "r{:06},{},{},{},\"{}\",{:.2},CN-{:02},{},{}\n",
            resp_id, rater, item, score, rationale, time, 11 + (*resp_id % 20), check, pass_str
        ));
        *resp_id += 1;
    };

    let rationale = |rng: &mut ChaCha8Rng| -> String {
        let n = rng.gen_range(4..8);
        let mut pool = RATIONALE_POOL.to_vec();
        pool.shuffle(rng);
        pool[..n].join(" ")
    };

    // Crowdsourced design: each rater covers a small block of posts, and
    // fifteen waves of raters give every item fifteen independent
    // ratings (a rater's concatenated rationales stay lexically diverse
    // only when their workload is modest).
    const POSTS_PER_RATER: usize = 4;
    for wave in 0..15 {
        for (group, block) in surveyed.chunks(POSTS_PER_RATER).enumerate() {
            let rater = format!("w{wave:02}g{group:02}");
            let mut since_check = 0usize;
            for (clean, _raw) in block {
                let items = mock.analyze(&clean.text_clean);
                // Halo: one rater's overall impression of a post nudges
                // all five category ratings together.
                let halo = 0.8 * normal(&mut rng);
                for cat in &categories {
                    let base = items
                        .iter()
                        .filter(|i| i.category == cat.token())
                        .map(|i| f64::from(i.score))
                        .fold(1.0, f64::max);
                    let score = (base + halo + 0.5 * normal(&mut rng)).round().clamp(1.0, 7.0) as u8;
                    let r = rationale(&mut rng);
                    let time = 2.5 + rng.gen_range(0.0..15.0);
                    push_row(&mut csv, &rater, &item_id(&clean.id, cat), score, &r, time, false, None, &mut resp_id);
                    since_check += 1;
                    // Attention checks at 10% frequency.
                    if since_check % 10 == 0 {
                        push_row(
                            &mut csv,
                            &rater,
                            "check::Attention",
                            4,
                            "attention check answered as instructed",
                            3.0 + rng.gen_range(0.0..4.0),
                            true,
                            Some(true),
                            &mut resp_id,
                        );
                    }
                }
            }
        }
    }

    // Speedster: plausible scores but a third of responses under 2s.
    {
        let rater = "rater_speed";
        for (clean, _raw) in surveyed.iter().take(POSTS_PER_RATER) {
            for cat in &categories {
                let time = if rng.gen_bool(0.33) {
                    rng.gen_range(0.6..1.95)
                } else {
                    2.2 + rng.gen_range(0.0..6.0)
                };
                let r = rationale(&mut rng);
                let score = rng.gen_range(1..=7);
                push_row(&mut csv, rater, &item_id(&clean.id, cat), score, &r, time, false, None, &mut resp_id);
            }
        }
    }
    // Attention-check failure: one failed check sinks the rater.
    {
        let rater = "rater_fail";
        for (i, (clean, _raw)) in surveyed.iter().take(POSTS_PER_RATER).enumerate() {
            for cat in &categories {
                let r = rationale(&mut rng);
                let score = rng.gen_range(1..=7);
                push_row(&mut csv, rater, &item_id(&clean.id, cat), score, &r, 4.0, false, None, &mut resp_id);
            }
            if i == 2 {
                push_row(&mut csv, rater, "check::Attention", 1, "missed it", 3.0, true, Some(false), &mut resp_id);
            }
        }
    }
    // Low lexical diversity: one repeated word.
    {
        let rater = "rater_lowttr";
        for (clean, _raw) in surveyed.iter().take(POSTS_PER_RATER) {
            for cat in &categories {
                let score = rng.gen_range(1..=7);
                push_row(&mut csv, rater, &item_id(&clean.id, cat), score, "good good good good", 5.0, false, None, &mut resp_id);
            }
        }
    }

    std::fs::write(out_dir.join("responses.csv"), &csv).expect("write responses");
    println!("responses: {resp_id} rows");

    let config = serde_json::json!({
        "paths": {
            "corpus": "data/corpus.jsonl",
            "responses": "data/responses.csv",
            "out_dir": "out"
        },
        "minhash": {"k": 128, "threshold": 0.85, "seed": 1},
        "provider": {
            "endpoint": "http://localhost:0/v1/complete",
            "model": "expectation-extractor",
            "temperature": 0.0,
            "mock": true
        },
        "survey": {"time_floor": 2.0, "ttr_floor": 0.30, "min_raters": 3},
        "scorer": {"lr": 0.02, "epochs": 120, "seed": 2, "warmup_steps": 100, "batch_size": 32},
        "analysis": {"scale": 100.0, "n_trees": 200, "max_depth": 8, "shap_background": 100, "seed": 3},
        "topk": 5
    });
    let mut config_json = serde_json::to_string_pretty(&config).unwrap();
    config_json.push('\n');
    std::fs::write(out_dir.join("config.json"), config_json).expect("write config");
    println!("wrote data/config.json");
}
