//! # expect-core
//!
//! Batch analytics for travel-related user-generated content. The crate
//! turns raw social-media posts plus crowdsourced survey labels into
//! quantified destination-expectation scores and engagement-driver
//! analyses:
//!
//! - **corpus**: JSONL ingestion, noise removal, normalization, inclusion
//!   filtering, and MinHash near-duplicate removal.
//! - **extraction**: provider-abstracted elicitation of expectation
//!   categories per post (deterministic offline mock or remote HTTP
//!   endpoint), Top-k consolidation, and expert-review sampling.
//! - **survey**: questionnaire ingestion with quality controls,
//!   Cronbach's and Krippendorff's alpha, mean-score aggregation, and
//!   stratified corpus splits.
//! - **scorer**: a linear surrogate intensity model trained by MSE
//!   gradient descent with warmup + cosine learning-rate scheduling.
//! - **agreement**: Bland-Altman concordance between model and human
//!   scores.
//! - **engagement**: OLS with inference, random-forest regression,
//!   partial dependence, and exact Shapley attribution of like counts.
//!
//! All randomness flows from explicit seeds; every operation is
//! deterministic for a fixed seed regardless of worker count.

pub mod agreement;
pub mod corpus;
pub mod engagement;
pub mod extraction;
pub mod hash;
pub mod scorer;
pub mod survey;

pub use extraction::ExpectationCategory;
