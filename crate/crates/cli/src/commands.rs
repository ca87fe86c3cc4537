//! The pipeline commands: split, train-embed, tune, evaluate, cross-corpus,
//! and score.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use evscore::corpus::{
    embedding_corpus, load_corpus, save_corpus, stratified_split, EssayCollection,
    SplitSpec,
};
use evscore::embedding::{
    load_embeddings, load_metadata, select_config, train_cbow, train_skipgram, write_metadata,
    Algorithm, CandidateModel, Matcher, TrainParams, VectorFormat,
};
use evscore::error::{Error, Result};
use evscore::eval::{self, EvalReport, PipelineConfig};
use evscore::evidence::{
    self, find_example_evidence, load_example_list, load_topic_list, ExampleList, FeatureSchema,
    TopicList,
};
use evscore::learner::{self, ForestModel, ForestParams, SmoteParams};

use crate::config::RunConfig;

/// One tuned matcher choice recorded by `tune`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub label: String,
    pub algorithm: String,
    pub path: PathBuf,
    pub threshold: f64,
    pub dev_qwk: f64,
}

/// The `selection.json` artifact: the overall winner, the best pick per
/// model family (sg, cbow, each external file), and the full dev-QWK table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionFile {
    pub best: SelectionEntry,
    pub families: Vec<SelectionEntry>,
    pub table: Vec<SelectionTableRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionTableRow {
    pub label: String,
    pub algorithm: String,
    pub threshold: f64,
    pub dev_qwk: f64,
}

fn write_fingerprint(config: &RunConfig, command: &str) -> Result<()> {
    let path = config
        .paths
        .out_dir
        .join(format!("{command}.fingerprint.txt"));
    std::fs::write(&path, format!("{}\n", config.fingerprint(command)))?;
    Ok(())
}

fn load_lists(config: &RunConfig) -> Result<(TopicList, ExampleList)> {
    RunConfig::require_exists(&config.paths.topics, "topic list")?;
    RunConfig::require_exists(&config.paths.examples, "example list")?;
    let topics = load_topic_list(&config.paths.topics)?;
    let examples = load_example_list(&config.paths.examples)?;
    examples.validate_against(&topics)?;
    Ok((topics, examples))
}

/// Stratify the corpus into embed/dev/test files. Ungraded essays join the
/// embedding part (they only ever feed embedding training), so the three
/// output record counts sum to the input count.
pub fn cmd_split(config: &RunConfig) -> Result<()> {
    let corpus_path = config
        .paths
        .corpus
        .as_ref()
        .ok_or_else(|| Error::validation("no corpus path configured"))?;
    RunConfig::require_exists(corpus_path, "corpus")?;
    std::fs::create_dir_all(&config.paths.out_dir)?;

    let collection = load_corpus(corpus_path, config.paths.corpus_format)?;
    let (graded, ungraded) = collection.partition_graded();
    let spec = SplitSpec::new(config.split.ratios, config.seed)?;
    let (embed, dev, test) = stratified_split(&graded, &spec)?;

    let mut embed_essays = embed.essays;
    embed_essays.extend(ungraded.essays.iter().cloned());
    let embed = EssayCollection::new("embed", embed_essays)?;
    let dev = EssayCollection::new("dev", dev.essays)?;
    let test = EssayCollection::new("test", test.essays)?;

    let (embed_path, dev_path, test_path) = config.split_paths();
    save_corpus(&embed, &embed_path, config.paths.corpus_format)?;
    save_corpus(&dev, &dev_path, config.paths.corpus_format)?;
    save_corpus(&test, &test_path, config.paths.corpus_format)?;
    write_fingerprint(config, "split")?;

    println!(
        "split {} essays -> embed {} (incl. {} ungraded), dev {}, test {}",
        collection.len(),
        embed.len(),
        ungraded.len(),
        dev.len(),
        test.len()
    );
    Ok(())
}

/// Train one embedding model per grid point (algorithm x dimension x
/// window) on the embedding split.
pub fn cmd_train_embed(config: &RunConfig) -> Result<()> {
    let (embed_path, _, _) = config.split_paths();
    RunConfig::require_exists(&embed_path, "embedding corpus (run `split` first)")?;
    let grid = &config.embedding;
    if grid.algorithms.is_empty() || grid.dimensions.is_empty() || grid.windows.is_empty() {
        return Err(Error::validation("embedding grid is empty"));
    }

    let collection = load_corpus(&embed_path, config.paths.corpus_format)?;
    let empty = EssayCollection::new("none", vec![])?;
    let texts = embedding_corpus(&collection, &empty);

    let models_dir = config.models_dir();
    std::fs::create_dir_all(&models_dir)?;
    let mut written = 0;
    for algorithm in &grid.algorithms {
        for &dimension in &grid.dimensions {
            for &window in &grid.windows {
                let params = TrainParams {
                    dimension,
                    window,
                    negatives: grid.negatives,
                    subsample: grid.subsample,
                    epochs: grid.epochs,
                    learning_rate: grid.learning_rate,
                    min_count: grid.min_count,
                    seed: config.seed,
                };
                let model = match algorithm.as_str() {
                    "sg" => train_skipgram(&texts, &params)?,
                    "cbow" => train_cbow(&texts, &params)?,
                    other => {
                        return Err(Error::validation(format!(
                            "unknown algorithm {other:?}"
                        )))
                    }
                };
                let path = models_dir.join(format!("{}.vec", model.metadata.source));
                evscore::embedding::save_text(&model, &path)?;
                write_metadata(&model.metadata, &path)?;
                written += 1;
                println!(
                    "trained {} (V={}, d={})",
                    path.display(),
                    model.vocab().len(),
                    model.dimension()
                );
            }
        }
    }
    write_fingerprint(config, "train-embed")?;
    println!("wrote {written} model file(s) to {}", models_dir.display());
    Ok(())
}

/// Candidate models for tuning: everything under `models/` plus the
/// configured external vector files.
fn gather_candidates(config: &RunConfig) -> Result<Vec<(CandidateModel, String, PathBuf)>> {
    let mut out = Vec::new();
    let models_dir = config.models_dir();
    if models_dir.is_dir() {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&models_dir)?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().map_or(false, |e| e == "vec"))
            .collect();
        paths.sort();
        for path in paths {
            let model = load_embeddings(&path, VectorFormat::Text)?;
            let metadata = load_metadata(&path)?;
            let label = metadata.source.clone();
            let algorithm = metadata.algorithm.to_string();
            out.push((
                CandidateModel {
                    label,
                    model: Arc::new(model),
                },
                algorithm,
                path,
            ));
        }
    }
    for path in &config.paths.external_vectors {
        RunConfig::require_exists(path, "external vector file")?;
        let model = load_embeddings(path, VectorFormat::Text)?;
        out.push((
            CandidateModel {
                label: model.metadata.source.clone(),
                model: Arc::new(model),
            },
            Algorithm::External.to_string(),
            path.clone(),
        ));
    }
    Ok(out)
}

/// Pick the best (model, threshold) per dev-set QWK and record the whole
/// grid.
pub fn cmd_tune(config: &RunConfig) -> Result<()> {
    let (_, dev_path, _) = config.split_paths();
    RunConfig::require_exists(&dev_path, "dev corpus (run `split` first)")?;
    let (topics, examples) = load_lists(config)?;
    let dev = load_corpus(&dev_path, config.paths.corpus_format)?;

    let candidates = gather_candidates(config)?;
    if candidates.is_empty() {
        return Err(Error::EmptyInput(
            "no candidate models (run `train-embed` or configure external_vectors)".into(),
        ));
    }
    let models: Vec<CandidateModel> = candidates.iter().map(|(c, _, _)| c.clone()).collect();
    let outcome = select_config(
        &dev,
        &models,
        &config.tune.thresholds,
        &topics,
        &examples,
        &config.window.to_config()?,
        &SmoteParams {
            k_neighbors: config.smote.k_neighbors,
            seed: config.seed,
        },
        &ForestParams {
            tree_count: config.forest.trees,
            max_depth: config.forest.max_depth,
            features_per_split: None,
            seed: config.seed,
        },
        config.tune.folds,
        config.seed,
    )?;

    // Rows arrive in grid order (candidate-major); attach algorithms.
    let thresholds_per = config.tune.thresholds.len();
    let table: Vec<SelectionTableRow> = outcome
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| SelectionTableRow {
            label: row.label.clone(),
            algorithm: candidates[i / thresholds_per].1.clone(),
            threshold: row.threshold,
            dev_qwk: row.dev_qwk,
        })
        .collect();

    let entry_for = |candidate_index: usize, threshold: f64, dev_qwk: f64| SelectionEntry {
        label: candidates[candidate_index].0.label.clone(),
        algorithm: candidates[candidate_index].1.clone(),
        path: candidates[candidate_index].2.clone(),
        threshold,
        dev_qwk,
    };

    // Best grid point per family: sg, cbow, and each external file.
    let mut families: Vec<SelectionEntry> = Vec::new();
    for (i, row) in outcome.rows.iter().enumerate() {
        let candidate_index = i / thresholds_per;
        let family = family_key(&candidates[candidate_index].1, &row.label);
        let candidate_entry = entry_for(candidate_index, row.threshold, row.dev_qwk);
        match families
            .iter_mut()
            .find(|f| family_key(&f.algorithm, &f.label) == family)
        {
            None => families.push(candidate_entry),
            Some(existing) => {
                let better = row.dev_qwk > existing.dev_qwk
                    || (row.dev_qwk == existing.dev_qwk
                        && row.threshold < existing.threshold);
                if better {
                    *existing = candidate_entry;
                }
            }
        }
    }

    let selection = SelectionFile {
        best: entry_for(
            outcome.best_index,
            outcome.best_threshold,
            outcome.best_dev_qwk,
        ),
        families,
        table,
    };
    std::fs::create_dir_all(&config.paths.out_dir)?;
    let json = serde_json::to_string_pretty(&selection)
        .map_err(|e| Error::Internal(format!("serialize selection: {e}")))?;
    std::fs::write(config.selection_path(), json)?;

    let mut csv = String::from("label,algorithm,threshold,dev_qwk\n");
    for row in &selection.table {
        csv.push_str(&format!(
            "{},{},{:.2},{:.6}\n",
            row.label, row.algorithm, row.threshold, row.dev_qwk
        ));
    }
    std::fs::write(config.paths.out_dir.join("tune_table.csv"), csv)?;
    write_fingerprint(config, "tune")?;

    println!(
        "selected {} at threshold {:.2} (dev QWK {:.4})",
        selection.best.label, selection.best.threshold, selection.best.dev_qwk
    );
    Ok(())
}

fn family_key(algorithm: &str, label: &str) -> String {
    if algorithm == "external" {
        format!("external:{label}")
    } else {
        algorithm.to_string()
    }
}

/// An evaluation column: a named matcher configuration.
struct EvalColumn {
    label: String,
    matcher: Matcher,
    /// Vector file and threshold behind an embedding matcher.
    source: Option<(PathBuf, f64)>,
}

/// The matcher the final classifier was trained with; `score` must extract
/// features the same way.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelMatcherFile {
    pub label: String,
    pub mode: String,
    pub vectors: Option<PathBuf>,
    pub threshold: Option<f64>,
}

/// The rubric baseline plus one tuned matcher per family from
/// `selection.json` (when present).
fn evaluation_columns(config: &RunConfig) -> Result<Vec<EvalColumn>> {
    let mut columns = vec![EvalColumn {
        label: "rubric".into(),
        matcher: Matcher::exact(),
        source: None,
    }];
    let selection_path = config.selection_path();
    if selection_path.exists() {
        let selection: SelectionFile =
            serde_json::from_str(&std::fs::read_to_string(&selection_path)?).map_err(|e| {
                Error::parse(selection_path.display().to_string(), 1, e.to_string())
            })?;
        for family in &selection.families {
            let model = load_embeddings(&family.path, VectorFormat::Text)?;
            columns.push(EvalColumn {
                label: family_key(&family.algorithm, &family.label),
                matcher: Matcher::embedding(Arc::new(model), family.threshold)?,
                source: Some((family.path.clone(), family.threshold)),
            });
        }
    } else {
        log::info!("no selection.json; evaluating the rubric baseline only");
    }
    Ok(columns)
}

fn render_comparison(
    title: &str,
    corpus_label: &str,
    n: usize,
    fingerprint: &str,
    columns: &[EvalColumn],
    reports: &[EvalReport],
) -> Result<String> {
    // Significance marks, matching the familiar table style: column i lists
    // the 1-based numbers of columns it beats at p < 0.05 (paired t over
    // per-unit QWKs).
    let mut marks: Vec<Vec<usize>> = vec![Vec::new(); reports.len()];
    for i in 0..reports.len() {
        for j in 0..reports.len() {
            if i == j {
                continue;
            }
            let p = eval::significance(&reports[i].unit_qwks, &reports[j].unit_qwks)?;
            if p < 0.05 && reports[i].mean_qwk > reports[j].mean_qwk {
                marks[i].push(j + 1);
            }
        }
    }

    let mut out = String::new();
    out.push_str(&format!("{title}\n"));
    out.push_str(&format!("corpus: {corpus_label} (n={n})\n"));
    out.push_str(&format!("config: {fingerprint}\n"));
    out.push_str(&format!(
        "units per column: {}\n\n",
        reports.first().map_or(0, |r| r.unit_qwks.len())
    ));
    out.push_str(&format!(
        "{:<4} {:<24} {:>9} {:>9}  {}\n",
        "#", "column", "mean_qwk", "kappa", "beats(p<0.05)"
    ));
    for (i, (column, report)) in columns.iter().zip(reports).enumerate() {
        let beats = if marks[i].is_empty() {
            "-".to_string()
        } else {
            format!(
                "({})",
                marks[i]
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            )
        };
        out.push_str(&format!(
            "{:<4} {:<24} {:>9.4} {:>9.4}  {}\n",
            format!("({})", i + 1),
            column.label,
            report.mean_qwk,
            report.kappa,
            beats
        ));
    }
    out.push('\n');
    for (column, report) in columns.iter().zip(reports) {
        out.push_str(&format!("---- {} ----\n", column.label));
        out.push_str(&report.render_text());
        out.push('\n');
    }
    Ok(out)
}

fn write_unit_csv(path: &Path, columns: &[EvalColumn], reports: &[EvalReport]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "column,unit,qwk")?;
    for (column, report) in columns.iter().zip(reports) {
        for (unit, qwk) in report.unit_qwks.iter().enumerate() {
            writeln!(out, "{},{unit},{qwk:.6}", column.label)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Final in-corpus evaluation: repeated stratified cross-validation on the
/// test split, one column per matcher, plus a trained classifier for
/// `score`.
pub fn cmd_evaluate(config: &RunConfig) -> Result<()> {
    let (_, _, test_path) = config.split_paths();
    RunConfig::require_exists(&test_path, "test corpus (run `split` first)")?;
    let (topics, examples) = load_lists(config)?;
    let test = load_corpus(&test_path, config.paths.corpus_format)?;
    let columns = evaluation_columns(config)?;

    let smote = SmoteParams {
        k_neighbors: config.smote.k_neighbors,
        seed: config.seed,
    };
    let forest = ForestParams {
        tree_count: config.forest.trees,
        max_depth: config.forest.max_depth,
        features_per_split: None,
        seed: config.seed,
    };

    let mut reports = Vec::with_capacity(columns.len());
    for column in &columns {
        let pipeline = PipelineConfig {
            topics: &topics,
            examples: &examples,
            matcher: column.matcher.clone(),
            window: config.window.to_config()?,
            smote: smote.clone(),
            forest: forest.clone(),
        };
        let mut report = eval::cross_validate(
            &test,
            &pipeline,
            config.eval.runs,
            config.eval.folds,
            config.seed,
        )?;
        report.label = column.label.clone();
        println!("{:<24} mean QWK {:.4}", column.label, report.mean_qwk);
        reports.push(report);
    }

    let fingerprint = config.fingerprint("evaluate");
    let text = render_comparison(
        "in-corpus evaluation (repeated stratified cross-validation)",
        &test.name,
        test.len(),
        &fingerprint,
        &columns,
        &reports,
    )?;
    std::fs::create_dir_all(&config.paths.out_dir)?;
    std::fs::write(config.paths.out_dir.join("report.txt"), &text)?;
    write_unit_csv(
        &config.paths.out_dir.join("report.csv"),
        &columns,
        &reports,
    )?;

    // Features and a final model under the best column; `score` reuses the
    // same matcher, recorded beside the model.
    let best_column = columns
        .iter()
        .zip(&reports)
        .max_by(|a, b| {
            a.1.mean_qwk
                .partial_cmp(&b.1.mean_qwk)
                .expect("finite QWK")
        })
        .map(|(c, _)| c)
        .expect("at least the rubric column");
    let dataset = eval::extract_dataset(
        &test,
        &topics,
        &examples,
        &best_column.matcher,
        &config.window.to_config()?,
    )?;
    dataset.write_delimited(&config.paths.out_dir.join("features_test.csv"))?;
    let balanced = learner::smote(&dataset, &smote)?;
    let model = learner::train_forest(&balanced, &forest)?;
    std::fs::write(config.model_out_path(), model.to_json()?)?;
    let matcher_record = ModelMatcherFile {
        label: best_column.label.clone(),
        mode: best_column.matcher.mode_name().to_string(),
        vectors: best_column.source.as_ref().map(|(p, _)| p.clone()),
        threshold: best_column.source.as_ref().map(|&(_, t)| t),
    };
    std::fs::write(
        config.model_matcher_path(),
        serde_json::to_string_pretty(&matcher_record)
            .map_err(|e| Error::Internal(format!("serialize matcher record: {e}")))?,
    )?;
    write_fingerprint(config, "evaluate")?;

    println!(
        "report in {}; final model ({}) in {}",
        config.paths.out_dir.join("report.txt").display(),
        best_column.label,
        config.model_out_path().display()
    );
    Ok(())
}

/// Cross-corpus evaluation: train on one corpus, score ten disjoint parts
/// of the other, repeated with fresh seeds.
pub fn cmd_cross_corpus(
    config: &RunConfig,
    train_path: &Path,
    test_path: &Path,
) -> Result<()> {
    RunConfig::require_exists(train_path, "training corpus")?;
    RunConfig::require_exists(test_path, "testing corpus")?;
    let (topics, examples) = load_lists(config)?;
    let train_all = load_corpus(train_path, config.paths.corpus_format)?;
    let test_all = load_corpus(test_path, config.paths.corpus_format)?;
    let (train, train_ungraded) = train_all.partition_graded();
    let (test, test_ungraded) = test_all.partition_graded();
    if !train_ungraded.is_empty() || !test_ungraded.is_empty() {
        log::info!(
            "ignoring {} ungraded training and {} ungraded testing essays",
            train_ungraded.len(),
            test_ungraded.len()
        );
    }
    let columns = evaluation_columns(config)?;

    let mut reports = Vec::with_capacity(columns.len());
    for column in &columns {
        let pipeline = PipelineConfig {
            topics: &topics,
            examples: &examples,
            matcher: column.matcher.clone(),
            window: config.window.to_config()?,
            smote: SmoteParams {
                k_neighbors: config.smote.k_neighbors,
                seed: config.seed,
            },
            forest: ForestParams {
                tree_count: config.forest.trees,
                max_depth: config.forest.max_depth,
                features_per_split: None,
                seed: config.seed,
            },
        };
        let mut report = eval::cross_corpus(
            &train,
            &test,
            &pipeline,
            config.eval.folds,
            config.eval.runs,
            config.seed,
        )?;
        report.label = column.label.clone();
        println!("{:<24} mean QWK {:.4}", column.label, report.mean_qwk);
        reports.push(report);
    }

    let fingerprint = config.fingerprint("cross-corpus");
    let text = render_comparison(
        "cross-corpus evaluation (train once per repeat, test on disjoint parts)",
        &format!("{} -> {}", train.name, test.name),
        test.len(),
        &fingerprint,
        &columns,
        &reports,
    )?;
    std::fs::create_dir_all(&config.paths.out_dir)?;
    std::fs::write(config.paths.out_dir.join("cc_report.txt"), &text)?;
    write_unit_csv(
        &config.paths.out_dir.join("cc_report.csv"),
        &columns,
        &reports,
    )?;
    write_fingerprint(config, "cross-corpus")?;
    println!(
        "report in {}",
        config.paths.out_dir.join("cc_report.txt").display()
    );
    Ok(())
}

/// Score one essay: predicted rubric score, the feature values, and every
/// located example with its character span and matched words.
pub fn cmd_score(config: &RunConfig, essay_path: &Path) -> Result<()> {
    RunConfig::require_exists(essay_path, "essay file")?;
    let (topics, examples) = load_lists(config)?;
    let model_path = config.model_out_path();
    RunConfig::require_exists(&model_path, "trained model (run `evaluate` first)")?;
    let model = ForestModel::from_json(&std::fs::read_to_string(&model_path)?)?;

    let schema = FeatureSchema::for_lists(&examples);
    if schema != model.schema {
        return Err(Error::SchemaMismatch(format!(
            "model was trained with columns {:?}, lists produce {:?}",
            model.schema.columns, schema.columns
        )));
    }

    // The matcher the model was trained with; features must be extracted
    // the same way they were during training.
    let matcher_path = config.model_matcher_path();
    let matcher = if matcher_path.exists() {
        let record: ModelMatcherFile =
            serde_json::from_str(&std::fs::read_to_string(&matcher_path)?).map_err(|e| {
                Error::parse(matcher_path.display().to_string(), 1, e.to_string())
            })?;
        match (record.mode.as_str(), record.vectors, record.threshold) {
            ("embedding", Some(vectors), Some(threshold)) => {
                let embedding = load_embeddings(&vectors, VectorFormat::Text)?;
                Matcher::embedding(Arc::new(embedding), threshold)?
            }
            _ => Matcher::exact(),
        }
    } else {
        Matcher::exact()
    };

    let text = std::fs::read_to_string(essay_path)?;
    let window = config.window.to_config()?;
    let features = evidence::extract_features(&text, &topics, &examples, &matcher, &window);
    let score = model.predict(&features.to_vector())?;

    println!("score: {score}");
    println!("matcher: {}", matcher.mode_name());
    println!("features:");
    println!("  npe: {}", features.npe);
    println!("  con: {}", features.con);
    for (topic, value) in examples.topic_order().iter().zip(&features.spc) {
        println!("  spc[{topic}]: {value}");
    }
    println!("  woc: {}", features.woc);

    let found = find_example_evidence(&text, &examples, &matcher, &window);
    println!("evidence ({} example(s) located):", found.len());
    for ev in &found {
        let snippet: String = text[ev.start..ev.end].chars().take(60).collect();
        let words: Vec<String> = ev
            .words
            .iter()
            .map(|w| {
                let how = match w.kind {
                    evscore::embedding::MatchKind::Exact => "exact",
                    evscore::embedding::MatchKind::Embedding => "embedding",
                };
                format!("{} ~ {:?} ({how})", w.list_stem, w.token)
            })
            .collect();
        println!(
            "  {}/{}: bytes {}..{} {:?} [{}]",
            ev.topic,
            ev.example_id,
            ev.start,
            ev.end,
            snippet,
            words.join(", ")
        );
    }
    Ok(())
}

