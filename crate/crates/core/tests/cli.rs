use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use reviewbomb_core::cli::{sha256_file, Manifest, RunConfig};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/synthetic_reviews.csv")
}

fn reviewbomb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reviewbomb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files_in(dir: &Path) -> BTreeSet<String> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect()
}

const PIPELINE_ARTIFACTS: [&str; 23] = [
    "records.jsonl",
    "ingest_report.json",
    "provided_scores.json",
    "language_flags.json",
    "aggregates.json",
    "corpus.jsonl",
    "stats.json",
    "stats.csv",
    "tfidf_model.json",
    "preprocess.json",
    "model_mnb.json",
    "model_logreg.json",
    "eval_report.json",
    "term_ranking.json",
    "categories.json",
    "categories.csv",
    "wordcloud.json",
    "wordcloud.svg",
    "scatter.json",
    "scatter.csv",
    "histograms.json",
    "histograms.csv",
    "confusion_matrix.csv",
];

#[test]
fn pipeline_is_complete_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&reviewbomb(&["pipeline", "--input", s(&fixture()), "--out", s(&a)]));
    ok(&reviewbomb(&["pipeline", "--input", s(&fixture()), "--out", s(&b)]));

    let manifest = Manifest::load(&a.join("manifest.pipeline.json")).unwrap();
    let listed: BTreeSet<String> = manifest.artifacts.iter().map(|e| e.name.clone()).collect();
    let expected: BTreeSet<String> = PIPELINE_ARTIFACTS.iter().map(|n| n.to_string()).collect();
    assert_eq!(listed, expected);
    // everything on disk except the manifest itself is listed, and the lock is gone
    let mut on_disk = files_in(&a);
    assert!(on_disk.remove("manifest.pipeline.json"));
    assert_eq!(on_disk, expected);

    for e in &manifest.artifacts {
        assert_eq!(sha256_file(&a.join(&e.name)).unwrap(), e.sha256, "{}", e.name);
        assert_eq!(fs::read(a.join(&e.name)).unwrap(), fs::read(b.join(&e.name)).unwrap(), "{}", e.name);
    }
    assert_eq!(manifest.inputs.len(), 1);
    assert_eq!(manifest.inputs[0].sha256, sha256_file(&fixture()).unwrap());
    assert_eq!(manifest.seed, 42);

    // same config and input into the same directory: byte-identical manifest
    let first = fs::read(a.join("manifest.pipeline.json")).unwrap();
    ok(&reviewbomb(&["pipeline", "--input", s(&fixture()), "--out", s(&a)]));
    assert_eq!(fs::read(a.join("manifest.pipeline.json")).unwrap(), first);
}

#[test]
fn stages_run_in_isolation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = s(&out);
    ok(&reviewbomb(&["ingest", "--input", s(&fixture()), "--out", o]));
    ok(&reviewbomb(&["build-dataset", "--out", o]));
    ok(&reviewbomb(&["train", "--out", o]));
    ok(&reviewbomb(&["rank-terms", "--out", o, "--top-k", "20"]));
    ok(&reviewbomb(&["export-figures", "--out", o]));

    let reviews = tmp.path().join("reviews.txt");
    fs::write(
        &reviews,
        "The greedy company lied about everything and I want a refund.\n\n\
         The combat is fun but the camera takes a while to get used to.\n",
    )
    .unwrap();
    let pred = reviewbomb(&["predict", "--input", s(&reviews), "--out", o]);
    ok(&pred);
    let lines: Vec<serde_json::Value> = fs::read_to_string(out.join("predictions.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["label"], "RB");
    assert_eq!(lines[1]["label"], "NonRB");
    assert_eq!(lines[1]["line"], 3);
    let stdout = String::from_utf8(pred.stdout).unwrap();
    assert!(stdout.starts_with("RB\t"));

    // each artifact belongs to exactly one manifest
    let mut seen = BTreeSet::new();
    for cmd in ["ingest", "build-dataset", "train", "rank-terms", "export-figures", "predict"] {
        let m = Manifest::load(&out.join(format!("manifest.{cmd}.json"))).unwrap();
        assert!(!m.inputs.is_empty(), "{cmd} recorded no inputs");
        for a in m.artifacts {
            assert!(seen.insert(a.name.clone()), "{} listed twice", a.name);
        }
    }
    assert!(seen.contains("predictions.jsonl"));

    let ranking: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("term_ranking.json")).unwrap()).unwrap();
    assert_eq!(ranking["entries"].as_array().unwrap().len(), 20);
}

#[test]
fn train_with_missing_input_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let r = reviewbomb(&["train", "--input", s(&tmp.path().join("missing.jsonl")), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing.jsonl"));
    assert!(!out.exists());
}

#[test]
fn usage_and_config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(reviewbomb(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(reviewbomb(&["pipeline", "--mode", "both"]).status.code(), Some(1));
    assert_eq!(reviewbomb(&["ingest", "--out", s(tmp.path())]).status.code(), Some(1));

    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"cv_folds": 1}"#).unwrap();
    let r = reviewbomb(&["pipeline", "--config", s(&cfg), "--input", s(&fixture())]);
    assert_eq!(r.status.code(), Some(1));
    fs::write(&cfg, r#"{"unknown_field": 1}"#).unwrap();
    let r = reviewbomb(&["pipeline", "--config", s(&cfg), "--input", s(&fixture())]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(reviewbomb(&["--help"]).status.code(), Some(0));
}

#[test]
fn locked_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join(".lock"), "1").unwrap();
    let r = reviewbomb(&["ingest", "--input", s(&fixture()), "--out", s(tmp.path())]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("in use"));
    assert!(!tmp.path().join("records.jsonl").exists());
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = RunConfig {
        input: Some(fixture()),
        out_dir: out.clone(),
        mnb_alphas: vec![0.1],
        logreg_lambdas: vec![],
        ..Default::default()
    };
    let path = tmp.path().join("config.json");
    fs::write(&path, cfg.to_json().unwrap()).unwrap();
    ok(&reviewbomb(&["pipeline", "--config", s(&path), "--mode", "controls", "--seed", "7", "--max-features", "40"]));

    let m = Manifest::load(&out.join("manifest.pipeline.json")).unwrap();
    assert_eq!(m.seed, 7);
    assert_eq!(m.config.max_features, 40);
    assert!(!out.join("model_logreg.json").exists());
    let corpus = fs::read_to_string(out.join("corpus.jsonl")).unwrap();
    assert!(corpus.lines().next().unwrap().contains("candidates_vs_negative_controls"));
    let tfidf: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("tfidf_model.json")).unwrap()).unwrap();
    assert!(tfidf["terms"].as_array().unwrap().len() <= 40);
}

#[test]
fn rank_terms_rejects_a_foreign_vocabulary() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&reviewbomb(&["pipeline", "--input", s(&fixture()), "--out", s(&a)]));
    ok(&reviewbomb(&["pipeline", "--input", s(&fixture()), "--out", s(&b), "--max-features", "30"]));
    fs::copy(b.join("tfidf_model.json"), a.join("tfidf_model.json")).unwrap();
    let r = reviewbomb(&["rank-terms", "--out", s(&a)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("vocabulary"));
}

#[test]
fn config_round_trips() {
    let cfg = RunConfig {
        seed: 99,
        mnb_alphas: vec![0.3, 0.03],
        lexicon: Some(PathBuf::from("lex.json")),
        ..Default::default()
    };
    let back = RunConfig::from_json(&cfg.to_json().unwrap()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_json().unwrap(), cfg.to_json().unwrap());
}
