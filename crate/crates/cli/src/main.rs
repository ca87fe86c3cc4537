//! `evscore` — scores the evidence dimension of source-based student essays.
//!
//! The pipeline follows one declarative config file:
//!
//! 1. `split` stratifies a graded corpus into embedding/dev/test parts.
//! 2. `train-embed` trains skip-gram and CBOW word vectors on the
//!    embedding part (plus any ungraded essays).
//! 3. `tune` picks the best model and similarity threshold on the dev part.
//! 4. `evaluate` runs repeated stratified cross-validation on the test
//!    part, comparing the exact-matching rubric baseline against the tuned
//!    fuzzy matchers, and trains the final classifier.
//! 5. `cross-corpus` trains on one corpus and tests on another.
//! 6. `score` grades a single essay and explains which evidence it found.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 internal error.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use evscore::error::Error;

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "evscore",
    version,
    about = "Evidence scoring for source-based student essays"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "evscore.toml")]
    config: PathBuf,

    /// Output root; overrides the config file and EVSCORE_OUT.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stratify the corpus into embed/dev/test files.
    Split {
        /// Corpus file; overrides the config file.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Train the embedding-model grid on the embedding split.
    TrainEmbed,
    /// Select the best embedding model and threshold on the dev split.
    Tune,
    /// Compare matchers by cross-validation on the test split.
    Evaluate,
    /// Train on one corpus, evaluate on disjoint parts of another.
    CrossCorpus {
        #[arg(long)]
        train_corpus: PathBuf,
        #[arg(long)]
        test_corpus: PathBuf,
    },
    /// Score one essay file and explain the evidence found.
    Score {
        #[arg(long)]
        essay: PathBuf,
    },
}

fn run(cli: Cli) -> evscore::Result<()> {
    let overrides = Overrides {
        out_dir: cli.out_dir.clone(),
        seed: cli.seed,
        corpus: match &cli.command {
            Command::Split { corpus } => corpus.clone(),
            _ => None,
        },
    };
    let config = RunConfig::load(&cli.config, &overrides)?;
    match &cli.command {
        Command::Split { .. } => commands::cmd_split(&config),
        Command::TrainEmbed => commands::cmd_train_embed(&config),
        Command::Tune => commands::cmd_tune(&config),
        Command::Evaluate => commands::cmd_evaluate(&config),
        Command::CrossCorpus {
            train_corpus,
            test_corpus,
        } => commands::cmd_cross_corpus(&config, train_corpus, test_corpus),
        Command::Score { essay } => commands::cmd_score(&config, essay),
    }
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        eprintln!("error: {error}");
        let code = match error {
            Error::Internal(_) => 3,
            _ => 2,
        };
        std::process::exit(code);
    }
}
