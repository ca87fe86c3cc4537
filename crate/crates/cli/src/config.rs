//! Run configuration: one declarative TOML file plus a few flag overrides.
//!
//! Every command resolves the config, applies overrides (flags beat the
//! `EVSCORE_OUT` environment variable, which beats the file), and writes a
//! fingerprint of the resolved settings next to its outputs so runs can be
//! compared honestly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use evscore::corpus::CorpusFormat;
use evscore::error::{Error, Result};
use evscore::evidence::WindowConfig;
use evscore::fingerprint;

/// Environment variable overriding the output root.
pub const OUT_DIR_ENV: &str = "EVSCORE_OUT";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// The full corpus file consumed by `split`.
    pub corpus: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub corpus_format: CorpusFormat,
    pub topics: PathBuf,
    pub examples: PathBuf,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Off-the-shelf word2vec text files offered to `tune` as candidates.
    #[serde(default)]
    pub external_vectors: Vec<PathBuf>,
}

fn default_format() -> CorpusFormat {
    CorpusFormat::Delimited
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub ratios: [f64; 3],
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            ratios: [0.40, 0.20, 0.40],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSection {
    pub size: usize,
    pub stride: usize,
}

impl Default for WindowSection {
    fn default() -> Self {
        WindowSection { size: 10, stride: 1 }
    }
}

impl WindowSection {
    pub fn to_config(&self) -> Result<WindowConfig> {
        WindowConfig::new(self.size, self.stride)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingSection {
    /// Grid axes: every (algorithm, dimension, window) combination trains.
    pub algorithms: Vec<String>,
    pub dimensions: Vec<usize>,
    pub windows: Vec<usize>,
    pub negatives: usize,
    pub subsample: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: u64,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            algorithms: vec!["sg".into(), "cbow".into()],
            dimensions: vec![100],
            windows: vec![5],
            negatives: 10,
            subsample: 1e-3,
            epochs: 20,
            learning_rate: 0.025,
            min_count: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneSection {
    /// Cosine thresholds searched; empty means the default 0.50..0.95 grid.
    pub thresholds: Vec<f64>,
    pub folds: usize,
}

impl Default for TuneSection {
    fn default() -> Self {
        TuneSection {
            thresholds: evscore::embedding::default_threshold_grid(),
            folds: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub runs: usize,
    pub folds: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { runs: 10, folds: 10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestSection {
    pub trees: usize,
    pub max_depth: usize,
}

impl Default for ForestSection {
    fn default() -> Self {
        ForestSection {
            trees: 100,
            max_depth: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoteSection {
    pub k_neighbors: usize,
}

impl Default for SmoteSection {
    fn default() -> Self {
        SmoteSection { k_neighbors: 5 }
    }
}

/// The resolved run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; mandatory so no run ever depends on the wall clock.
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub tune: TuneSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub forest: ForestSection,
    #[serde(default)]
    pub smote: SmoteSection,
}

/// Flag overrides applied on top of the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub corpus: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
        let shown = path.display().to_string();
        let content = std::fs::read_to_string(path).map_err(|e| {
            Error::validation(format!("cannot read config {shown}: {e}"))
        })?;
        let mut config: RunConfig = toml::from_str(&content)
            .map_err(|e| Error::parse(&shown, 1, e.to_string()))?;

        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            config.paths.out_dir = PathBuf::from(dir);
        }
        if let Some(dir) = &overrides.out_dir {
            config.paths.out_dir = dir.clone();
        }
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(corpus) = &overrides.corpus {
            config.paths.corpus = Some(corpus.clone());
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        for algo in &self.embedding.algorithms {
            if algo != "sg" && algo != "cbow" {
                return Err(Error::validation(format!(
                    "unknown embedding algorithm {algo:?} (expected \"sg\" or \"cbow\")"
                )));
            }
        }
        for &t in &self.tune.thresholds {
            if !(-1.0..=1.0).contains(&t) {
                return Err(Error::validation(format!(
                    "threshold {t} outside [-1, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Fingerprint of the fully resolved configuration for one command.
    pub fn fingerprint(&self, command: &str) -> String {
        fingerprint::fingerprint_json(&(command, self))
    }

    /// Require a path to exist before using it.
    pub fn require_exists(path: &Path, what: &str) -> Result<()> {
        if !path.exists() {
            return Err(Error::validation(format!(
                "{what} not found at {}",
                path.display()
            )));
        }
        Ok(())
    }

    pub fn corpus_extension(&self) -> &'static str {
        match self.paths.corpus_format {
            CorpusFormat::Delimited => "csv",
            CorpusFormat::RecordPerLine => "jsonl",
        }
    }

    /// Conventional locations of the split outputs under `out_dir`.
    pub fn split_paths(&self) -> (PathBuf, PathBuf, PathBuf) {
        let ext = self.corpus_extension();
        let dir = &self.paths.out_dir;
        (
            dir.join(format!("embed.{ext}")),
            dir.join(format!("dev.{ext}")),
            dir.join(format!("test.{ext}")),
        )
    }

    pub fn models_dir(&self) -> PathBuf {
        self.paths.out_dir.join("models")
    }

    pub fn selection_path(&self) -> PathBuf {
        self.paths.out_dir.join("selection.json")
    }

    pub fn model_out_path(&self) -> PathBuf {
        self.paths.out_dir.join("model.json")
    }

    pub fn model_matcher_path(&self) -> PathBuf {
        self.paths.out_dir.join("model_matcher.json")
    }
}
