//! Word embeddings and the similarity-gated fuzzy matcher.
//!
//! Exact stem matching misses evidence written with the student's own
//! vocabulary, systematic misspellings ("proverty"), and conjugations the
//! stemmer cannot unify ("went"/"go"). Word vectors trained on the essay
//! corpus recover much of it: two words whose cosine similarity clears a
//! tuned threshold count as a match. Models are trained here from scratch
//! (skip-gram and CBOW with negative sampling) or loaded from standard
//! word2vec files; the best model and threshold are chosen on the dev split.

mod train;
mod vectors_io;

pub use train::{
    cbow_event_gradients, cbow_event_loss, sg_event_gradients, sg_event_loss, train_cbow,
    train_skipgram, EventGradients,
};
pub use vectors_io::{
    load_embeddings, load_metadata, metadata_path, save_binary, save_text, write_metadata,
    VectorFormat,
};

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::EssayCollection;
use crate::error::{Error, Result};
use crate::evidence::{ExampleList, ListWord, TopicList, WindowConfig};
use crate::learner::{ForestParams, SmoteParams};
use crate::text::Token;

/// Indexed vocabulary over normalized tokens.
///
/// Indices are dense and deterministic: descending count, ties broken
/// lexicographically. Words below `min_count` are excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    total: u64,
    min_count: u64,
}

impl Vocabulary {
    /// Count words over token sequences and keep those seen at least
    /// `min_count` times.
    pub fn build(corpus: &[Vec<String>], min_count: u64) -> Result<Vocabulary> {
        if corpus.iter().all(|doc| doc.is_empty()) {
            return Err(Error::EmptyInput("embedding corpus has no tokens".into()));
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for doc in corpus {
            for word in doc {
                *counts.entry(word.as_str()).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let words: Vec<String> = entries.iter().map(|(w, _)| w.to_string()).collect();
        let counts: Vec<u64> = entries.iter().map(|&(_, c)| c).collect();
        Ok(Self::from_parts(words, counts, min_count))
    }

    /// Vocabulary for externally trained vectors, where true counts are
    /// unknown; file order is preserved.
    pub fn from_words(words: Vec<String>) -> Result<Vocabulary> {
        let mut seen = std::collections::HashSet::new();
        for word in &words {
            if !seen.insert(word.as_str()) {
                return Err(Error::validation(format!(
                    "duplicate word {word:?} in vector file"
                )));
            }
        }
        let counts = vec![1; words.len()];
        Ok(Self::from_parts(words, counts, 1))
    }

    fn from_parts(words: Vec<String>, counts: Vec<u64>, min_count: u64) -> Vocabulary {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let total = counts.iter().sum();
        Vocabulary {
            words,
            counts,
            index,
            total,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    /// Total token count over the retained vocabulary.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[serde(rename = "sg")]
    SkipGram,
    Cbow,
    External,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Algorithm::SkipGram => "sg",
            Algorithm::Cbow => "cbow",
            Algorithm::External => "external",
        };
        write!(f, "{name}")
    }
}

/// Hyperparameters for embedding training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub dimension: usize,
    /// Context window size; the effective span per position is sampled
    /// uniformly from 1..=window, as in the reference implementation.
    pub window: usize,
    pub negatives: usize,
    /// Subsampling threshold for frequent words; 0 disables.
    pub subsample: f64,
    pub epochs: usize,
    /// Initial learning rate, decaying linearly to near zero.
    pub learning_rate: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            dimension: 100,
            window: 5,
            negatives: 10,
            subsample: 1e-3,
            epochs: 20,
            learning_rate: 0.025,
            min_count: 2,
            seed: 1,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if self.dimension < 1 {
            return Err(Error::validation("embedding dimension must be >= 1"));
        }
        if self.window < 1 {
            return Err(Error::validation("context window must be >= 1"));
        }
        if self.negatives < 1 {
            return Err(Error::validation("negative sample count must be >= 1"));
        }
        if self.epochs < 1 {
            return Err(Error::validation("epoch count must be >= 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::validation("learning rate must be positive"));
        }
        if self.subsample < 0.0 {
            return Err(Error::validation("subsample threshold must be >= 0"));
        }
        Ok(())
    }
}

/// Provenance and training record of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub algorithm: Algorithm,
    /// Training parameters; absent for external vectors.
    pub params: Option<TrainParams>,
    /// Fingerprint of the training corpus or loaded file.
    pub corpus_fingerprint: String,
    pub seed: u64,
    /// Human-readable label, e.g. `sg_d100_w5` or the external file name.
    pub source: String,
    /// Mean negative-sampling loss per epoch, in training order.
    pub epoch_mean_loss: Vec<f64>,
}

/// A vocabulary with one dense real vector per word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    vocab: Vocabulary,
    dimension: usize,
    /// Row-major `V x d`.
    vectors: Vec<f64>,
    pub metadata: ModelMetadata,
}

impl EmbeddingModel {
    pub fn new(
        vocab: Vocabulary,
        dimension: usize,
        vectors: Vec<f64>,
        metadata: ModelMetadata,
    ) -> Result<EmbeddingModel> {
        if dimension == 0 {
            return Err(Error::validation("embedding dimension must be >= 1"));
        }
        if vectors.len() != vocab.len() * dimension {
            return Err(Error::Internal(format!(
                "vector matrix has {} entries, expected {} x {}",
                vectors.len(),
                vocab.len(),
                dimension
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Internal("non-finite embedding vector".into()));
        }
        Ok(EmbeddingModel {
            vocab,
            dimension,
            vectors,
            metadata,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vector_at(&self, index: usize) -> &[f64] {
        &self.vectors[index * self.dimension..(index + 1) * self.dimension]
    }

    /// Vector for a word, if in vocabulary.
    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vocab.index_of(word).map(|i| self.vector_at(i))
    }

    /// Cosine similarity between two vocabulary words; `None` when either
    /// is out of vocabulary.
    pub fn similarity(&self, a: &str, b: &str) -> Option<f64> {
        let va = self.vector(a)?;
        let vb = self.vector(b)?;
        cosine(va, vb).ok()
    }

    /// The `k` nearest vocabulary words to `word` by cosine, excluding the
    /// word itself; ties resolve to the lower index.
    pub fn nearest(&self, word: &str, k: usize) -> Vec<(String, f64)> {
        let Some(target) = self.vector(word) else {
            return Vec::new();
        };
        let mut scored: Vec<(usize, f64)> = (0..self.vocab.len())
            .filter(|&i| self.vocab.word(i) != word)
            .filter_map(|i| cosine(target, self.vector_at(i)).ok().map(|s| (i, s)))
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
        scored
            .into_iter()
            .take(k)
            .map(|(i, s)| (self.vocab.word(i).to_string(), s))
            .collect()
    }

    /// The full `V x d` matrix, row-major.
    pub fn raw_vectors(&self) -> &[f64] {
        &self.vectors
    }
}

/// Cosine similarity `dot(u, v) / (|u| |v|)`, in [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::validation(format!(
            "cosine of vectors with different dimensions ({} vs {})",
            u.len(),
            v.len()
        )));
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Degenerate("cosine of a zero-norm vector".into()));
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// How a token matched a list word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    /// Stems are equal.
    Exact,
    /// Cosine similarity of the normalized forms cleared the threshold.
    Embedding,
}

/// Word-equivalence policy: exact stem matching, optionally supplemented by
/// embedding similarity above a threshold.
#[derive(Debug, Clone)]
pub enum Matcher {
    Exact,
    Embedding {
        model: Arc<EmbeddingModel>,
        threshold: f64,
    },
}

impl Matcher {
    pub fn exact() -> Matcher {
        Matcher::Exact
    }

    pub fn embedding(model: Arc<EmbeddingModel>, threshold: f64) -> Result<Matcher> {
        if !(-1.0..=1.0).contains(&threshold) {
            return Err(Error::validation(format!(
                "similarity threshold {threshold} outside [-1, 1]"
            )));
        }
        Ok(Matcher::Embedding { model, threshold })
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            Matcher::Exact => "exact",
            Matcher::Embedding { .. } => "embedding",
        }
    }

    /// Do two words match? Equal stems always do; in embedding mode, two
    /// in-vocabulary norms with cosine at or above the threshold also do.
    /// Out-of-vocabulary words fall back to exact matching, never an error.
    pub fn fuzzy_match(&self, a: &Token, b: &Token) -> bool {
        if a.stem == b.stem {
            return true;
        }
        self.norms_similar(&a.norm, &b.norm)
    }

    /// Match an essay token against a crafted-list word, reporting how.
    pub fn match_kind(&self, token: &Token, word: &ListWord) -> Option<MatchKind> {
        if token.stem == word.stem {
            return Some(MatchKind::Exact);
        }
        if word
            .norms
            .iter()
            .any(|norm| self.norms_similar(&token.norm, norm))
        {
            return Some(MatchKind::Embedding);
        }
        None
    }

    pub fn matches(&self, token: &Token, word: &ListWord) -> bool {
        self.match_kind(token, word).is_some()
    }

    fn norms_similar(&self, a: &str, b: &str) -> bool {
        match self {
            Matcher::Exact => false,
            Matcher::Embedding { model, threshold } => match model.similarity(a, b) {
                Some(sim) => sim >= *threshold,
                None => false,
            },
        }
    }
}

/// A labeled candidate model for dev-set selection.
#[derive(Debug, Clone)]
pub struct CandidateModel {
    pub label: String,
    pub model: Arc<EmbeddingModel>,
}

/// One evaluated grid point of the selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub label: String,
    pub threshold: f64,
    pub dev_qwk: f64,
}

/// Outcome of dev-set model/threshold selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    /// Index into the candidate list.
    pub best_index: usize,
    pub best_label: String,
    pub best_threshold: f64,
    pub best_dev_qwk: f64,
    /// Every (candidate, threshold) pair with its dev QWK, in grid order.
    pub rows: Vec<SelectionRow>,
}

/// Default threshold grid: 0.50 to 0.95 in steps of 0.05.
pub fn default_threshold_grid() -> Vec<f64> {
    (0..10).map(|i| 0.50 + 0.05 * i as f64).collect()
}

/// Choose the best (model, threshold) pair by dev-set QWK.
///
/// For each grid point, features are extracted on the dev split with the
/// candidate matcher and scored by a single stratified k-fold
/// cross-validation. The maximum mean QWK wins; ties prefer the lower
/// threshold, then the earlier candidate.
#[allow(clippy::too_many_arguments)]
pub fn select_config(
    dev: &EssayCollection,
    candidates: &[CandidateModel],
    thresholds: &[f64],
    topics: &TopicList,
    examples: &ExampleList,
    window: &WindowConfig,
    smote: &SmoteParams,
    forest: &ForestParams,
    folds: usize,
    seed: u64,
) -> Result<SelectionOutcome> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("no candidate embedding models".into()));
    }
    if thresholds.is_empty() {
        return Err(Error::EmptyInput("no thresholds to search".into()));
    }
    if dev.is_empty() {
        return Err(Error::EmptyInput("dev collection is empty".into()));
    }

    let mut rows = Vec::with_capacity(candidates.len() * thresholds.len());
    let mut best: Option<(f64, f64, usize)> = None; // (qwk, threshold, candidate)
    for (ci, candidate) in candidates.iter().enumerate() {
        for &threshold in thresholds {
            let matcher = Matcher::embedding(Arc::clone(&candidate.model), threshold)?;
            let dataset = crate::eval::extract_dataset(dev, topics, examples, &matcher, window)?;
            let report = crate::eval::cross_validate_dataset(
                &dataset,
                &crate::eval::ForestFactory::new(forest.clone()),
                Some(smote),
                1,
                folds,
                seed,
                String::new(),
            )?;
            let qwk = report.mean_qwk;
            rows.push(SelectionRow {
                label: candidate.label.clone(),
                threshold,
                dev_qwk: qwk,
            });
            let better = match best {
                None => true,
                Some((bq, bt, bc)) => {
                    qwk > bq
                        || (qwk == bq && threshold < bt)
                        || (qwk == bq && threshold == bt && ci < bc)
                }
            };
            if better {
                best = Some((qwk, threshold, ci));
            }
        }
    }
    let (qwk, threshold, index) = best.expect("non-empty grid");
    Ok(SelectionOutcome {
        best_index: index,
        best_label: candidates[index].label.clone(),
        best_threshold: threshold,
        best_dev_qwk: qwk,
        rows,
    })
}
