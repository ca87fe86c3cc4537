//! Behavior of the `evscore` commands: artifacts, determinism, exit codes.

mod common;

use std::path::Path;

use common::{assert_success, bin, bytes, run, write_synth_project, ProjectOptions};
use evscore::corpus::{load_corpus, CorpusFormat};
use evscore::embedding::load_metadata;

#[test]
fn split_writes_three_files_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_synth_project(dir.path(), &ProjectOptions::default());
    assert_success(&run(&config, &["split"]), "split");

    let out = dir.path().join("out");
    let mut total = 0;
    for part in ["embed.csv", "dev.csv", "test.csv"] {
        let collection = load_corpus(&out.join(part), CorpusFormat::Delimited).unwrap();
        total += collection.len();
    }
    assert_eq!(total, 210, "three parts must cover the input corpus");

    // Ungraded essays end up in the embedding part only.
    let embed = load_corpus(&out.join("embed.csv"), CorpusFormat::Delimited).unwrap();
    let (_, ungraded) = embed.partition_graded();
    assert_eq!(ungraded.len(), 10);
    for part in ["dev.csv", "test.csv"] {
        let collection = load_corpus(&out.join(part), CorpusFormat::Delimited).unwrap();
        let (_, ungraded) = collection.partition_graded();
        assert!(ungraded.is_empty(), "{part} contains ungraded essays");
    }

    let before: Vec<Vec<u8>> = ["embed.csv", "dev.csv", "test.csv"]
        .iter()
        .map(|p| bytes(&out.join(p)))
        .collect();
    assert_success(&run(&config, &["split"]), "second split");
    let after: Vec<Vec<u8>> = ["embed.csv", "dev.csv", "test.csv"]
        .iter()
        .map(|p| bytes(&out.join(p)))
        .collect();
    assert_eq!(before, after, "same config and seed must give identical bytes");
}

#[test]
fn split_missing_corpus_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_synth_project(dir.path(), &ProjectOptions::default());
    std::fs::remove_file(dir.path().join("corpus.csv")).unwrap();
    let output = run(&config, &["split"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&output.stderr).is_empty());
}

#[test]
fn missing_config_exits_2() {
    let output = run(Path::new("/nonexistent/evscore.toml"), &["split"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn train_embed_writes_grid_with_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let options = ProjectOptions {
        essays: 80,
        dimensions: vec![8, 12],
        windows: vec![2, 3],
        algorithms: vec!["sg", "cbow"],
        epochs: 2,
        ..ProjectOptions::default()
    };
    let config = write_synth_project(dir.path(), &options);
    assert_success(&run(&config, &["split"]), "split");
    assert_success(&run(&config, &["train-embed"]), "train-embed");

    let models = dir.path().join("out/models");
    let mut vec_files: Vec<String> = std::fs::read_dir(&models)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|name| name.ends_with(".vec"))
        .collect();
    vec_files.sort();
    assert_eq!(vec_files.len(), 8, "2 algos x 2 dims x 2 windows: {vec_files:?}");

    // Sidecar round-trips the grid point.
    let metadata = load_metadata(&models.join("sg_d8_w2.vec")).unwrap();
    let params = metadata.params.expect("trained model has params");
    assert_eq!(params.dimension, 8);
    assert_eq!(params.window, 2);
    assert_eq!(params.epochs, 2);
    assert_eq!(params.seed, options.seed);
    assert_eq!(metadata.algorithm.to_string(), "sg");
    assert_eq!(metadata.epoch_mean_loss.len(), 2);
}

#[test]
fn train_embed_empty_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_synth_project(dir.path(), &ProjectOptions::default());
    assert_success(&run(&config, &["split"]), "split");
    let text = std::fs::read_to_string(&config).unwrap();
    let text = text.replace("algorithms = [\"sg\", \"cbow\"]", "algorithms = []");
    std::fs::write(&config, text).unwrap();
    let output = run(&config, &["train-embed"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn tune_records_full_grid_and_selection() {
    let dir = tempfile::tempdir().unwrap();
    let options = ProjectOptions {
        essays: 150,
        dimensions: vec![12],
        thresholds: vec![0.6, 0.8],
        ..ProjectOptions::default()
    };
    let config = write_synth_project(dir.path(), &options);
    for step in ["split", "train-embed", "tune"] {
        assert_success(&run(&config, &[step]), step);
    }
    let selection: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/selection.json")).unwrap(),
    )
    .unwrap();
    // 2 candidates (sg, cbow) x 2 thresholds.
    assert_eq!(selection["table"].as_array().unwrap().len(), 4);
    assert_eq!(selection["families"].as_array().unwrap().len(), 2);
    let best_threshold = selection["best"]["threshold"].as_f64().unwrap();
    assert!(best_threshold == 0.6 || best_threshold == 0.8);
    assert!(dir.path().join("out/tune_table.csv").exists());

    // Tune with no candidates is an input error.
    std::fs::remove_dir_all(dir.path().join("out/models")).unwrap();
    let output = run(&config, &["tune"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn evaluate_compares_matchers_and_reproduces_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_synth_project(dir.path(), &ProjectOptions::default());
    for step in ["split", "train-embed", "tune", "evaluate"] {
        assert_success(&run(&config, &[step]), step);
    }
    let out = dir.path().join("out");
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("rubric"), "missing baseline column:\n{report}");
    assert!(
        report.contains("sg") && report.contains("cbow"),
        "missing embedding columns:\n{report}"
    );
    assert!(out.join("features_test.csv").exists());
    assert!(out.join("features_test.csv.schema.json").exists());
    assert!(out.join("model.json").exists());
    assert!(out.join("model_matcher.json").exists());
    assert!(out.join("evaluate.fingerprint.txt").exists());

    let before = (
        bytes(&out.join("report.txt")),
        bytes(&out.join("report.csv")),
        bytes(&out.join("model.json")),
    );
    assert_success(&run(&config, &["evaluate"]), "second evaluate");
    let after = (
        bytes(&out.join("report.txt")),
        bytes(&out.join("report.csv")),
        bytes(&out.join("model.json")),
    );
    assert_eq!(before, after, "evaluate must be byte-deterministic");
}

#[test]
fn cross_corpus_runs_both_directions() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_synth_project(
        dir.path(),
        &ProjectOptions {
            essays: 150,
            eval_runs: 2,
            eval_folds: 3,
            ..ProjectOptions::default()
        },
    );
    // Two graded corpora from different generator seeds.
    let other = evscore::synth::generate(&evscore::synth::SynthConfig {
        essays: 120,
        seed: 99,
        ..evscore::synth::SynthConfig::default()
    })
    .unwrap();
    let other_path = dir.path().join("other.csv");
    evscore::corpus::save_corpus(
        &other.collection,
        &other_path,
        CorpusFormat::Delimited,
    )
    .unwrap();

    assert_success(
        &run(
            &config,
            &[
                "cross-corpus",
                "--train-corpus",
                dir.path().join("corpus.csv").to_str().unwrap(),
                "--test-corpus",
                other_path.to_str().unwrap(),
            ],
        ),
        "cross-corpus",
    );
    let report = std::fs::read_to_string(dir.path().join("out/cc_report.txt")).unwrap();
    assert!(report.contains("rubric"));
    // 2 repeats x 3 parts per column.
    assert!(report.contains("units per column: 6"), "{report}");
}

#[test]
fn score_explains_evidence_spans_on_demo_data() {
    // The bundled demo corpus uses article-like lists, so the canonical
    // "water was connected to the hospital" span resolves under the water
    // topic.
    let repo_root = Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let dir = tempfile::tempdir().unwrap();
    let out_flag = dir.path().join("demo-out");
    let config = repo_root.join("data/demo/config.toml");

    let run_demo = |args: &[&str]| {
        let mut cmd = std::process::Command::new(bin());
        cmd.current_dir(&repo_root)
            .arg("--config")
            .arg(&config)
            .arg("--out-dir")
            .arg(&out_flag)
            .args(args);
        cmd.output().expect("spawn evscore")
    };
    for step in [&["split"][..], &["train-embed"], &["tune"], &["evaluate"]] {
        let output = run_demo(step);
        assert_success(&output, &format!("demo {step:?}"));
    }

    let essay = dir.path().join("essay.txt");
    std::fs::write(
        &essay,
        "In 2008 water was connected to the hospital. Bed nets are used in every site.",
    )
    .unwrap();
    let output = run_demo(&["score", "--essay", essay.to_str().unwrap()]);
    assert_success(&output, "score");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("score: "), "{stdout}");
    assert!(
        stdout.contains("water/water_connected"),
        "span not attributed to its topic:\n{stdout}"
    );

    // Reported spans index the essay text.
    let text = std::fs::read_to_string(&essay).unwrap();
    for line in stdout.lines().filter(|l| l.contains("bytes ")) {
        let range = line.split("bytes ").nth(1).unwrap();
        let range = range.split_whitespace().next().unwrap();
        let (start, end) = range.split_once("..").unwrap();
        let start: usize = start.parse().unwrap();
        let end: usize = end.parse().unwrap();
        assert!(start < end && end <= text.len(), "bad span {range}");
    }

    // Empty essay: minimal features, zero spans, still scored.
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let output = run_demo(&["score", "--essay", empty.to_str().unwrap()]);
    assert_success(&output, "score empty");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("score: "));
    assert!(stdout.contains("woc: 0"));
    assert!(stdout.contains("evidence (0 example(s) located)"));
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_synth_project(dir.path(), &ProjectOptions::default());
    let env_out = dir.path().join("env-out");
    let mut cmd = std::process::Command::new(bin());
    cmd.arg("--config")
        .arg(&config)
        .arg("split")
        .env("EVSCORE_OUT", &env_out);
    let output = cmd.output().unwrap();
    assert_success(&output, "split with EVSCORE_OUT");
    assert!(env_out.join("embed.csv").exists());
}
