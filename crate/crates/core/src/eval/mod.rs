//! The evaluation protocol: repeated stratified cross-validation,
//! cross-corpus testing, and significance checks.
//!
//! Cross-validation oversamples the training folds only. Every random
//! decision derives from the caller's master seed, so a report reproduces
//! bit for bit under the same configuration.

mod metrics;

pub use metrics::LabelPairs;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::EssayCollection;
use crate::embedding::Matcher;
use crate::error::{Error, Result};
use crate::evidence::{self, ExampleList, TopicList, WindowConfig};
use crate::fingerprint;
use crate::learner::{self, DataRow, Dataset, ForestModel, ForestParams, SmoteParams};
use crate::SCORE_CLASSES;

/// Aggregated evaluation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// What was evaluated (e.g. the matcher column name).
    pub label: String,
    /// One QWK per evaluation unit: per run (cross-validation, pooled over
    /// folds) or per test part (cross-corpus).
    pub unit_qwks: Vec<f64>,
    /// Arithmetic mean of `unit_qwks`.
    pub mean_qwk: f64,
    /// Unweighted Cohen's kappa over all pooled predictions.
    pub kappa: f64,
    /// Pooled confusion matrix, predictions in rows, references in columns.
    pub confusion: [[u64; SCORE_CLASSES]; SCORE_CLASSES],
    pub config_fingerprint: String,
}

impl EvalReport {
    /// Human-readable rendering; fixed six-decimal formatting keeps the
    /// bytes reproducible.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("evaluation: {}\n", self.label));
        out.push_str(&format!("config: {}\n", self.config_fingerprint));
        out.push_str(&format!("units: {}\n", self.unit_qwks.len()));
        for (i, q) in self.unit_qwks.iter().enumerate() {
            out.push_str(&format!("  qwk[{i:02}]: {q:.6}\n"));
        }
        out.push_str(&format!("mean_qwk: {:.6}\n", self.mean_qwk));
        out.push_str(&format!("kappa: {:.6}\n", self.kappa));
        out.push_str("confusion (rows predicted, cols reference):\n");
        for row in &self.confusion {
            out.push_str(&format!(
                "  {:>6} {:>6} {:>6} {:>6}\n",
                row[0], row[1], row[2], row[3]
            ));
        }
        out
    }
}

/// A fitted per-fold scorer.
pub trait RowScorer {
    /// Predict the label of one row; sees the id and features, never the
    /// reference label.
    fn predict(&self, id: &str, features: &[f64]) -> Result<u8>;
}

/// Trains a scorer on (already oversampled) training data.
pub trait ScorerFactory {
    fn fit(&self, train: &Dataset, seed: u64) -> Result<Box<dyn RowScorer>>;
}

/// The production pipeline: SMOTE-balanced training data into a random
/// forest.
pub struct ForestFactory {
    params: ForestParams,
}

impl ForestFactory {
    pub fn new(params: ForestParams) -> ForestFactory {
        ForestFactory { params }
    }
}

struct ForestScorer(ForestModel);

impl RowScorer for ForestScorer {
    fn predict(&self, _id: &str, features: &[f64]) -> Result<u8> {
        self.0.predict(features)
    }
}

impl ScorerFactory for ForestFactory {
    fn fit(&self, train: &Dataset, seed: u64) -> Result<Box<dyn RowScorer>> {
        let params = ForestParams {
            seed,
            ..self.params.clone()
        };
        Ok(Box::new(ForestScorer(learner::train_forest(
            train, &params,
        )?)))
    }
}

/// What one cross-validation fold saw; handed to observers so tests can
/// verify stratification and the no-leak discipline.
#[derive(Debug, Clone)]
pub struct FoldDiagnostics {
    pub run: usize,
    pub fold: usize,
    /// Ids of all training rows, synthetic included.
    pub train_ids: Vec<String>,
    /// Origin ids of the SMOTE-synthesized training rows.
    pub smote_origin_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

/// Derive a child seed from a master seed and context indices.
fn derive_seed(master: u64, tag: &str, a: u64, b: u64) -> u64 {
    let mut bytes = Vec::with_capacity(tag.len() + 24);
    bytes.extend_from_slice(tag.as_bytes());
    bytes.extend_from_slice(&master.to_le_bytes());
    bytes.extend_from_slice(&a.to_le_bytes());
    bytes.extend_from_slice(&b.to_le_bytes());
    fingerprint::fnv1a(&bytes)
}

/// Stratified k-fold assignment: per class, shuffle members and deal them
/// round-robin. Returns `folds` disjoint index sets covering the dataset.
fn stratified_folds(data: &Dataset, folds: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::validation("need at least 2 folds"));
    }
    for (label, count) in data.class_counts() {
        if count < folds {
            return Err(Error::Degenerate(format!(
                "class {label} has {count} rows, fewer than {folds} folds"
            )));
        }
    }
    let mut assignment = vec![Vec::new(); folds];
    let mut by_class: std::collections::BTreeMap<u8, Vec<usize>> = Default::default();
    for (i, row) in data.rows.iter().enumerate() {
        by_class.entry(row.label).or_default().push(i);
    }
    for members in by_class.values() {
        let mut shuffled = members.clone();
        shuffled.shuffle(rng);
        for (i, idx) in shuffled.into_iter().enumerate() {
            assignment[i % folds].push(idx);
        }
    }
    for fold in &mut assignment {
        fold.sort_unstable();
    }
    Ok(assignment)
}

/// Extract the labeled feature dataset for a collection. Every essay must
/// carry a first-rater score.
pub fn extract_dataset(
    collection: &EssayCollection,
    topics: &TopicList,
    examples: &ExampleList,
    matcher: &Matcher,
    window: &WindowConfig,
) -> Result<Dataset> {
    let schema = evidence::FeatureSchema::for_lists(examples);
    let mut rows = Vec::with_capacity(collection.len());
    for essay in collection.iter() {
        let label = essay.score_rater1.ok_or_else(|| {
            Error::validation(format!(
                "essay {:?} is ungraded; evaluation needs first-rater scores",
                essay.id
            ))
        })?;
        let features =
            evidence::extract_features(&essay.text, topics, examples, matcher, window);
        rows.push(DataRow {
            id: essay.id.clone(),
            features: features.to_vector(),
            label,
            origin: None,
        });
    }
    Dataset::new(schema, rows)
}

/// Cross-validate a feature dataset: `runs` repetitions of stratified
/// `folds`-fold cross-validation. Per fold, SMOTE (when configured) is
/// applied to the training rows only, a scorer is fitted, and the held-out
/// fold is predicted; each run contributes one QWK pooled over its folds.
pub fn cross_validate_dataset(
    data: &Dataset,
    factory: &dyn ScorerFactory,
    smote: Option<&SmoteParams>,
    runs: usize,
    folds: usize,
    seed: u64,
    config_fingerprint: String,
) -> Result<EvalReport> {
    cross_validate_dataset_observed(
        data,
        factory,
        smote,
        runs,
        folds,
        seed,
        config_fingerprint,
        &mut |_| {},
    )
}

/// [`cross_validate_dataset`] with a fold observer for diagnostics.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate_dataset_observed(
    data: &Dataset,
    factory: &dyn ScorerFactory,
    smote: Option<&SmoteParams>,
    runs: usize,
    folds: usize,
    seed: u64,
    config_fingerprint: String,
    observer: &mut dyn FnMut(&FoldDiagnostics),
) -> Result<EvalReport> {
    if runs < 1 {
        return Err(Error::validation("need at least 1 run"));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("empty dataset".into()));
    }

    let mut unit_qwks = Vec::with_capacity(runs);
    let mut pooled_pred: Vec<u8> = Vec::new();
    let mut pooled_ref: Vec<u8> = Vec::new();

    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "folds", run as u64, 0));
        let assignment = stratified_folds(data, folds, &mut rng)?;
        let mut run_pred: Vec<u8> = Vec::new();
        let mut run_ref: Vec<u8> = Vec::new();
        for (fold_idx, fold) in assignment.iter().enumerate() {
            let in_fold: std::collections::HashSet<usize> = fold.iter().copied().collect();
            let train_indices: Vec<usize> =
                (0..data.len()).filter(|i| !in_fold.contains(i)).collect();
            let mut train = data.subset(&train_indices);
            if let Some(params) = smote {
                let fold_params = SmoteParams {
                    k_neighbors: params.k_neighbors,
                    seed: derive_seed(params.seed, "smote", run as u64, fold_idx as u64),
                };
                train = learner::smote(&train, &fold_params)?;
            }
            let scorer = factory.fit(
                &train,
                derive_seed(seed, "fit", run as u64, fold_idx as u64),
            )?;
            observer(&FoldDiagnostics {
                run,
                fold: fold_idx,
                train_ids: train.rows.iter().map(|r| r.id.clone()).collect(),
                smote_origin_ids: train
                    .rows
                    .iter()
                    .filter_map(|r| r.origin.clone())
                    .collect(),
                test_ids: fold.iter().map(|&i| data.rows[i].id.clone()).collect(),
            });
            for &i in fold {
                let row = &data.rows[i];
                run_pred.push(scorer.predict(&row.id, &row.features)?);
                run_ref.push(row.label);
            }
        }
        unit_qwks.push(LabelPairs::new(run_pred.clone(), run_ref.clone())?.qwk());
        pooled_pred.extend(run_pred);
        pooled_ref.extend(run_ref);
    }

    let pooled = LabelPairs::new(pooled_pred, pooled_ref)?;
    let mean_qwk = unit_qwks.iter().sum::<f64>() / unit_qwks.len() as f64;
    Ok(EvalReport {
        label: String::new(),
        unit_qwks,
        mean_qwk,
        kappa: pooled.cohen_kappa(),
        confusion: pooled.confusion_matrix(),
        config_fingerprint,
    })
}

/// Summary of an essay-level pipeline, hashed into report fingerprints.
#[derive(Debug, Clone, Serialize)]
struct PipelineSummary<'a> {
    collection: &'a str,
    essays: usize,
    matcher_mode: &'a str,
    matcher_source: Option<String>,
    threshold: Option<f64>,
    window: &'a WindowConfig,
    smote: &'a SmoteParams,
    forest: &'a ForestParams,
    runs: usize,
    folds: usize,
    seed: u64,
}

/// Everything the essay-level evaluation needs.
pub struct PipelineConfig<'a> {
    pub topics: &'a TopicList,
    pub examples: &'a ExampleList,
    pub matcher: Matcher,
    pub window: WindowConfig,
    pub smote: SmoteParams,
    pub forest: ForestParams,
}

impl<'a> PipelineConfig<'a> {
    fn summary(
        &self,
        collection: &'a EssayCollection,
        runs: usize,
        folds: usize,
        seed: u64,
    ) -> PipelineSummary<'_> {
        let (source, threshold) = match &self.matcher {
            Matcher::Exact => (None, None),
            Matcher::Embedding { model, threshold } => {
                (Some(model.metadata.source.clone()), Some(*threshold))
            }
        };
        PipelineSummary {
            collection: &collection.name,
            essays: collection.len(),
            matcher_mode: self.matcher.mode_name(),
            matcher_source: source,
            threshold,
            window: &self.window,
            smote: &self.smote,
            forest: &self.forest,
            runs,
            folds,
            seed,
        }
    }
}

/// The in-corpus protocol: extract features once, then run `runs` x
/// `folds`-fold stratified cross-validation with fold-only oversampling.
pub fn cross_validate(
    collection: &EssayCollection,
    pipeline: &PipelineConfig,
    runs: usize,
    folds: usize,
    seed: u64,
) -> Result<EvalReport> {
    let data = extract_dataset(
        collection,
        pipeline.topics,
        pipeline.examples,
        &pipeline.matcher,
        &pipeline.window,
    )?;
    let fp = fingerprint::fingerprint_json(&pipeline.summary(collection, runs, folds, seed));
    let mut report = cross_validate_dataset(
        &data,
        &ForestFactory::new(pipeline.forest.clone()),
        Some(&pipeline.smote),
        runs,
        folds,
        seed,
        fp,
    )?;
    report.label = format!("cv:{}:{}", collection.name, pipeline.matcher.mode_name());
    Ok(report)
}

/// Cross-corpus generalization on feature datasets: per repeat, train once
/// on the full (oversampled) training corpus, then score each of the
/// `parts` disjoint stratified parts of the test corpus.
pub fn cross_corpus_datasets(
    train_data: &Dataset,
    test_data: &Dataset,
    factory: &dyn ScorerFactory,
    smote: Option<&SmoteParams>,
    parts: usize,
    repeats: usize,
    seed: u64,
    config_fingerprint: String,
) -> Result<EvalReport> {
    if repeats < 1 {
        return Err(Error::validation("need at least 1 repeat"));
    }
    if train_data.schema != test_data.schema {
        return Err(Error::SchemaMismatch(
            "train and test corpora have different feature schemas".into(),
        ));
    }

    let mut unit_qwks = Vec::with_capacity(repeats * parts);
    let mut pooled_pred: Vec<u8> = Vec::new();
    let mut pooled_ref: Vec<u8> = Vec::new();
    for repeat in 0..repeats {
        let mut train = train_data.clone();
        if let Some(params) = smote {
            let repeat_params = SmoteParams {
                k_neighbors: params.k_neighbors,
                seed: derive_seed(params.seed, "smote-cc", repeat as u64, 0),
            };
            train = learner::smote(&train, &repeat_params)?;
        }
        let scorer = factory.fit(&train, derive_seed(seed, "fit-cc", repeat as u64, 0))?;

        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "parts", repeat as u64, 0));
        let assignment = stratified_folds(test_data, parts, &mut rng)?;
        // Parts are disjoint and cover the test corpus.
        debug_assert_eq!(
            assignment.iter().map(Vec::len).sum::<usize>(),
            test_data.len()
        );
        for part in &assignment {
            let mut pred = Vec::with_capacity(part.len());
            let mut reference = Vec::with_capacity(part.len());
            for &i in part {
                let row = &test_data.rows[i];
                pred.push(scorer.predict(&row.id, &row.features)?);
                reference.push(row.label);
            }
            unit_qwks.push(LabelPairs::new(pred.clone(), reference.clone())?.qwk());
            pooled_pred.extend(pred);
            pooled_ref.extend(reference);
        }
    }

    let pooled = LabelPairs::new(pooled_pred, pooled_ref)?;
    let mean_qwk = unit_qwks.iter().sum::<f64>() / unit_qwks.len() as f64;
    Ok(EvalReport {
        label: String::new(),
        unit_qwks,
        mean_qwk,
        kappa: pooled.cohen_kappa(),
        confusion: pooled.confusion_matrix(),
        config_fingerprint,
    })
}

/// Essay-level cross-corpus evaluation.
pub fn cross_corpus(
    train: &EssayCollection,
    test: &EssayCollection,
    pipeline: &PipelineConfig,
    parts: usize,
    repeats: usize,
    seed: u64,
) -> Result<EvalReport> {
    let train_data = extract_dataset(
        train,
        pipeline.topics,
        pipeline.examples,
        &pipeline.matcher,
        &pipeline.window,
    )?;
    let test_data = extract_dataset(
        test,
        pipeline.topics,
        pipeline.examples,
        &pipeline.matcher,
        &pipeline.window,
    )?;
    let fp = fingerprint::fingerprint_json(&(
        pipeline.summary(train, repeats, parts, seed),
        &test.name,
        test.len(),
    ));
    let mut report = cross_corpus_datasets(
        &train_data,
        &test_data,
        &ForestFactory::new(pipeline.forest.clone()),
        Some(&pipeline.smote),
        parts,
        repeats,
        seed,
        fp,
    )?;
    report.label = format!(
        "cc:{}->{}:{}",
        train.name,
        test.name,
        pipeline.matcher.mode_name()
    );
    Ok(report)
}

/// Two-tailed paired t-test over equal-length score lists. Zero variance of
/// differences degenerates to p = 1 when the means agree, else p = 0.
pub fn significance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "paired score lists have different lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::validation("need at least 2 paired scores"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
    if var == 0.0 {
        log::warn!("paired t-test on zero-variance differences");
        return Ok(if mean == 0.0 { 1.0 } else { 0.0 });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n as f64 - 1.0)
        .map_err(|e| Error::Internal(format!("t distribution: {e}")))?;
    Ok(2.0 * (1.0 - dist.cdf(t.abs())))
}

/// The paired t statistic itself, exposed for cross-checks.
pub fn paired_t_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::validation("need equal-length lists of >= 2 scores"));
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    Ok(mean / (var / n).sqrt())
}
