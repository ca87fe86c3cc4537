//! Evidence scoring for source-based student essays.
//!
//! The library scores how well an essay uses evidence from a source article,
//! on the 1-4 scale used by human raters. The pipeline is built from
//! interpretable parts rather than an end-to-end model:
//!
//! - [`corpus`] — essay data model, corpus files, and the stratified
//!   embed/dev/test split.
//! - [`text`] — tokenization, sentence splitting, and suffix stripping.
//! - [`evidence`] — window-based extraction of the rubric features
//!   (NPE, CON, SPC, WOC) against expert-authored topic and example lists.
//! - [`embedding`] — skip-gram and CBOW word vectors trained on the essay
//!   corpus, external vector loading, and the similarity-gated fuzzy matcher
//!   that lets misspellings and paraphrases count as evidence.
//! - [`learner`] — SMOTE oversampling and a depth-limited random forest
//!   over the extracted feature vectors.
//! - [`eval`] — agreement metrics (Cohen's kappa, quadratic weighted kappa),
//!   repeated stratified cross-validation, cross-corpus evaluation, and
//!   significance testing.
//! - [`synth`] — synthetic corpus generation with planted evidence, used to
//!   validate the pipeline end to end when real graded corpora are not
//!   available.
//!
//! Everything is deterministic under a caller-supplied seed: splits, model
//! training, oversampling, and evaluation reports reproduce bit for bit.

pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod evidence;
pub mod fingerprint;
pub mod learner;
pub mod synth;
pub mod text;

pub use error::{Error, Result};

/// Lowest evidence score on the rubric scale.
pub const SCORE_MIN: u8 = 1;
/// Highest evidence score on the rubric scale.
pub const SCORE_MAX: u8 = 4;
/// Number of score classes.
pub const SCORE_CLASSES: usize = 4;
