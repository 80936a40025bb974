//! `extract`: cleaned posts -> per-post expectation items, corpus Top-k,
//! and the expert-review manifest.

use super::{artifacts, jsonl_bytes, read_pipeline_posts, require_artifact, StageError};
use crate::config::PipelineConfig;
use crate::manifest::StageRecorder;
use expect_core::corpus::{CleanPost, RawPost};
use expect_core::extraction::{
    consolidate_topk, extract_corpus, validate_sample, MockProvider, Provider, ProviderConfig,
    RemoteProvider,
};
use expect_core::hash::derive_seed;

pub fn run(cfg: &PipelineConfig, rec: &mut StageRecorder) -> Result<Vec<String>, StageError> {
    let posts_path = require_artifact(&cfg.paths.out_dir, artifacts::POSTS_CLEAN)?;
    rec.record_input(&posts_path)?;
    let pipeline_posts = read_pipeline_posts(&posts_path)?;

    let lexicon = cfg.lexicon().map_err(|e| StageError::Config(e.to_string()))?;
    let synonyms = cfg.synonyms().map_err(|e| StageError::Config(e.to_string()))?;
    let provider_cfg = ProviderConfig {
        endpoint: cfg.provider.endpoint.clone(),
        model_name: cfg.provider.model.clone(),
        temperature: cfg.provider.temperature,
        request_seed: cfg.provider.request_seed,
        max_retries: cfg.provider.max_retries,
        timeout_secs: cfg.provider.timeout_secs,
    };

    let mock;
    let remote;
    let provider: &dyn Provider = if cfg.provider.mock {
        mock = MockProvider::new(lexicon.clone());
        &mock
    } else {
        remote = RemoteProvider::new(&provider_cfg);
        &remote
    };

    let work: Vec<(CleanPost, Option<RawPost>)> = pipeline_posts
        .iter()
        .map(|p| {
            let raw = RawPost {
                id: p.id.clone(),
                platform: p.platform,
                text: p.text_clean.clone(),
                timestamp: p.timestamp,
                likes: Some(p.likes),
                comments: Some(p.comments),
                hashtags: vec![],
                geotag: None,
                sponsored_hint: None,
            };
            (p.clean_post(), Some(raw))
        })
        .collect();

    let extraction = extract_corpus(
        &work,
        provider,
        &provider_cfg,
        &synonyms,
        cfg.provider.in_flight,
    );
    if extraction.results.is_empty() && !extraction.failures.is_empty() {
        return Err(StageError::ProviderUnavailable(format!(
            "all {} posts failed; first: {}",
            extraction.failures.len(),
            extraction.failures[0].1
        )));
    }

    rec.write_output(
        artifacts::EXTRACTIONS,
        &jsonl_bytes(&extraction.results)?,
        extraction.results.len(),
    )?;

    if !extraction.failures.is_empty() {
        let mut failures = String::from("post_id,error\n");
        for (id, err) in &extraction.failures {
            failures.push_str(&format!("{},{}\n", id, err.replace(',', ";")));
        }
        rec.write_output(
            artifacts::EXTRACT_FAILURES,
            failures.as_bytes(),
            extraction.failures.len(),
        )?;
    }

    let ranks = consolidate_topk(&extraction.results, cfg.topk);
    let mut topk = String::from("category,frequency,share,word_count_share\n");
    for r in &ranks {
        topk.push_str(&format!(
            "{},{},{},{}\n",
            r.category.token(),
            r.frequency,
            r.share,
            r.word_count_share
        ));
    }
    rec.write_output(artifacts::TOPK, topk.as_bytes(), ranks.len())?;

    let review_seed = derive_seed(cfg.minhash.seed, "review");
    let (rows, flagged) = validate_sample(&extraction.results, 0.10, review_seed)
        .map_err(|e| StageError::Validation(e.to_string()))?;
    let mut manifest_csv = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut manifest_csv);
        for row in &rows {
            w.serialize(row)
                .map_err(|e| StageError::Io(anyhow::anyhow!("review manifest: {e}")))?;
        }
        w.flush().map_err(|e| StageError::Io(anyhow::anyhow!("{e}")))?;
    }
    rec.write_output(artifacts::REVIEW_MANIFEST, &manifest_csv, rows.len())?;

    let mut summary = vec![
        format!("extracted {} posts", extraction.results.len()),
        format!("top-{}: {}", cfg.topk, ranks.iter().map(|r| r.category.token()).collect::<Vec<_>>().join(", ")),
        format!("review manifest rows {}", rows.len()),
    ];
    if !flagged.is_empty() {
        summary.push(format!("review strata too small to sample: {}", flagged.join(", ")));
    }
    if !extraction.failures.is_empty() {
        summary.push(format!("unextracted posts {}", extraction.failures.len()));
    }
    Ok(summary)
}
