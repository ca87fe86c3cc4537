//! Shared helpers for driving the `evscore` binary in tests.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evscore::corpus::{save_corpus, CorpusFormat};
use evscore::evidence::{save_example_list, save_topic_list};
use evscore::synth::{generate, MisspellingPlan, SynthConfig};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_evscore")
}

pub fn run(config: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.arg("--config").arg(config);
    cmd.args(args);
    cmd.output().expect("spawn evscore")
}

pub fn assert_success(output: &Output, what: &str) {
    assert!(
        output.status.success(),
        "{what} failed with status {:?}\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr),
    );
}

pub struct ProjectOptions {
    pub essays: usize,
    pub ungraded: usize,
    pub misspelling: Option<f64>,
    pub label_noise: f64,
    pub seed: u64,
    pub dimensions: Vec<usize>,
    pub windows: Vec<usize>,
    pub algorithms: Vec<&'static str>,
    pub epochs: usize,
    pub min_count: u64,
    pub thresholds: Vec<f64>,
    pub tune_folds: usize,
    pub eval_runs: usize,
    pub eval_folds: usize,
    pub forest_trees: usize,
}

impl Default for ProjectOptions {
    fn default() -> Self {
        ProjectOptions {
            essays: 200,
            ungraded: 10,
            misspelling: None,
            label_noise: 0.08,
            seed: 11,
            dimensions: vec![16],
            windows: vec![3],
            algorithms: vec!["sg", "cbow"],
            epochs: 6,
            min_count: 2,
            thresholds: vec![0.6, 0.8],
            tune_folds: 5,
            eval_runs: 2,
            eval_folds: 5,
            forest_trees: 40,
        }
    }
}

/// Generate a synthetic project into `dir`: corpus.csv, list files, and an
/// evscore.toml pointing at them with `dir/out` as the output root.
/// Returns the config path.
pub fn write_synth_project(dir: &Path, options: &ProjectOptions) -> PathBuf {
    let corpus = generate(&SynthConfig {
        essays: options.essays,
        ungraded: options.ungraded,
        label_noise: options.label_noise,
        misspelling: options.misspelling.map(|rate| MisspellingPlan { rate }),
        seed: options.seed,
        ..SynthConfig::default()
    })
    .expect("generate corpus");

    let corpus_path = dir.join("corpus.csv");
    save_corpus(&corpus.collection, &corpus_path, CorpusFormat::Delimited).unwrap();
    save_topic_list(&corpus.topics, &dir.join("topics.txt")).unwrap();
    save_example_list(&corpus.examples, &dir.join("examples.txt")).unwrap();

    let algorithms: Vec<String> = options
        .algorithms
        .iter()
        .map(|a| format!("{a:?}"))
        .collect();
    let thresholds: Vec<String> = options.thresholds.iter().map(f64::to_string).collect();
    let dimensions: Vec<String> = options.dimensions.iter().map(usize::to_string).collect();
    let windows: Vec<String> = options.windows.iter().map(usize::to_string).collect();
    let config = format!(
        r#"seed = {seed}

[paths]
corpus = {corpus:?}
topics = {topics:?}
examples = {examples:?}
out_dir = {out:?}

[embedding]
algorithms = [{algorithms}]
dimensions = [{dimensions}]
windows = [{windows}]
epochs = {epochs}
min_count = {min_count}

[tune]
thresholds = [{thresholds}]
folds = {tune_folds}

[eval]
runs = {eval_runs}
folds = {eval_folds}

[forest]
trees = {forest_trees}
"#,
        seed = options.seed,
        corpus = corpus_path.display().to_string(),
        topics = dir.join("topics.txt").display().to_string(),
        examples = dir.join("examples.txt").display().to_string(),
        out = dir.join("out").display().to_string(),
        algorithms = algorithms.join(", "),
        dimensions = dimensions.join(", "),
        windows = windows.join(", "),
        epochs = options.epochs,
        min_count = options.min_count,
        thresholds = thresholds.join(", "),
        tune_folds = options.tune_folds,
        eval_runs = options.eval_runs,
        eval_folds = options.eval_folds,
        forest_trees = options.forest_trees,
    );
    let config_path = dir.join("evscore.toml");
    std::fs::write(&config_path, config).unwrap();
    config_path
}

/// Read a file as raw bytes, panicking with the path on failure.
pub fn bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}
