use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command as Process, Stdio};

use cherry_cli::stages::{DetectOutput, EvaluateOutput};
use cherry_cli::{run, Cli, CliError, Command, SplitArg};
use cherry_core::dataset::ExportRow;
use cherry_core::model::{load_corpus, Manifest};
use clap::Parser;
use serde::Deserialize;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic").canonicalize().unwrap()
}

fn important() -> HashSet<String> {
    fs::read_to_string(fixture().join("important.txt")).unwrap().lines().map(str::to_string).collect()
}

/// A run file in a fresh directory; `extra` is appended verbatim.
fn setup(extra: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture();
    let text = format!(
        r#"corpus_dir = "corpus"
registry = "{registry}"

[fetch.provider]
kind = "local_directory"
path = "{articles}"

[scorer]
kind = "lookup"
important = "{important}"

[dataset]
votes = "votes.jsonl"
ratio = 0.5
{extra}
"#,
        registry = f.join("registry.json").display(),
        articles = f.join("articles").display(),
        important = f.join("important.txt").display(),
    );
    let path = dir.path().join("run.toml");
    fs::write(&path, text).unwrap();
    (dir, path)
}

fn cherry(config: &Path, args: &[&str]) -> Result<cherry_cli::StageReport, CliError> {
    let mut argv = vec!["cherry", "--config", config.to_str().unwrap()];
    argv.extend_from_slice(args);
    run(&Cli::try_parse_from(argv).unwrap())
}

fn corpus_dir(config: &Path) -> PathBuf {
    config.parent().unwrap().join("corpus")
}

#[test]
fn stage_before_its_input_names_the_missing_artifact() {
    let (_dir, cfg) = setup("");
    let err = cherry(&cfg, &["cluster-statements"]).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("articles.jsonl"), "{err}");

    cherry(&cfg, &["ingest"]).unwrap();
    let err = cherry(&cfg, &["cluster-statements"]).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("statements.jsonl"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let (_dir, cfg) = setup("");
    let bin = env!("CARGO_BIN_EXE_cherry");
    let out = Process::new(bin).args(["--config", cfg.to_str().unwrap(), "segment"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("articles.jsonl"));

    let out = Process::new(bin).args(["--config", cfg.to_str().unwrap(), "--json", "ingest"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["stage"], "ingest");
    assert_eq!(report["outputs"]["articles"], 14);
    assert_eq!(report["config"]["cluster"]["articles"]["eps"], 0.04);

    let out = Process::new(bin).args(["--config", "/nonexistent/run.toml", "ingest"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_violation_is_reported_at_once() {
    let (_dir, cfg) = setup(
        r#"classes = 9
[cluster.statements]
eps = 3.0
min_points = 0
[detect]
presence_threshold = 4.0
[context]
policy = "neutral_single"
max_words = 0
"#,
    );
    let out = Process::new(env!("CARGO_BIN_EXE_cherry"))
        .args(["--config", cfg.to_str().unwrap(), "--json", "detect"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    for needle in ["dataset.classes 9", "cluster.statements", "detect:", "context:"] {
        assert!(stderr.contains(needle), "missing {needle} in {stderr}");
    }
    let failure: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(failure["exit_code"], 2);
    assert_eq!(failure["ok"], false);
}

#[derive(Deserialize)]
struct Expected {
    documents: Vec<ExpectedDocument>,
    outlet_means: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct ExpectedDocument {
    url: String,
    cherry_picked: Vec<String>,
}

fn run_through_detect(cfg: &Path) {
    for stage in ["ingest", "segment", "cluster-events", "cluster-statements", "detect"] {
        cherry(cfg, &[stage]).unwrap_or_else(|e| panic!("{stage}: {e}"));
    }
}

#[test]
fn full_pipeline_flags_the_planted_omissions() {
    let (_dir, cfg) = setup("");
    run_through_detect(&cfg);
    let dir = corpus_dir(&cfg);
    let corpus = load_corpus(&dir).unwrap();
    let detected: DetectOutput = serde_json::from_str(&fs::read_to_string(dir.join("detect.json")).unwrap()).unwrap();
    let expected: Expected = serde_json::from_str(&fs::read_to_string(fixture().join("expected.json")).unwrap()).unwrap();

    let url_of: BTreeMap<&str, &str> = corpus.articles.iter().map(|a| (a.id.as_str(), a.url.as_str())).collect();
    let mut got: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for r in &detected.run.reports {
        for d in &r.documents {
            let mut texts: Vec<String> = d.cherry_picked.iter().map(|c| c.text.clone()).collect();
            texts.sort();
            got.insert(url_of[d.article_id.as_str()], texts);
        }
    }
    assert_eq!(got.len(), expected.documents.len());
    for d in &expected.documents {
        let mut want = d.cherry_picked.clone();
        want.sort();
        assert_eq!(got[d.url.as_str()], want, "{}", d.url);
    }
    assert!(got.values().any(|v| !v.is_empty()));
    let means: BTreeMap<String, f64> = detected.outlet_scores.iter().map(|s| (s.outlet_id.clone(), s.mean)).collect();
    assert_eq!(means, expected.outlet_means);

    let m = Manifest::read(&dir).unwrap();
    assert_eq!(m.stages, ["ingest", "segment", "cluster-events", "cluster-statements", "detect"]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("reports/detect.json")).unwrap()).unwrap();
    assert_eq!(report["outputs"]["cherry_picked"], 10);
    assert_eq!(report["params"]["detect"]["presence_threshold"], 0.8);

    // Correlation against the registry's own ratings.
    cherry(&cfg, &["correlate"]).unwrap();
    let rows: Vec<serde_json::Value> = serde_json::from_str(&fs::read_to_string(dir.join("correlate.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["n"] == 6), "{rows:?}");

    // Rerunning an upstream stage drops everything after it.
    cherry(&cfg, &["segment"]).unwrap();
    assert!(!dir.join("detect.json").exists() && !dir.join("correlate.json").exists());
    assert_eq!(Manifest::read(&dir).unwrap().stages, ["ingest", "segment"]);
    assert_eq!(cherry(&cfg, &["detect"]).unwrap_err().exit_code(), 3);
}

#[test]
fn stages_are_idempotent() {
    let (_dir, cfg) = setup("");
    run_through_detect(&cfg);
    let dir = corpus_dir(&cfg);
    let snapshot = |names: &[&str]| names.iter().map(|n| fs::read(dir.join(n)).unwrap()).collect::<Vec<_>>();
    let files = ["articles.jsonl", "statements.jsonl", "events.jsonl", "clusters.jsonl", "detect.json", "manifest.json"];
    let before = snapshot(&files);
    run_through_detect(&cfg);
    assert_eq!(snapshot(&files), before);
}

/// Three annotators per cluster: 1 for the planted important statements,
/// 3 otherwise. One cluster gets only two votes and must be filtered.
fn write_votes(cfg: &Path) -> usize {
    let corpus = load_corpus(&corpus_dir(cfg)).unwrap();
    let text_of: BTreeMap<&str, &str> = corpus.statements.iter().map(|s| (s.id.as_str(), s.text.as_str())).collect();
    let important = important();
    let mut lines = String::new();
    let mut expected_rows = 0;
    for (i, c) in corpus.clusters.iter().enumerate() {
        let label = if important.contains(text_of[c.representative_id.as_str()]) { 1 } else { 3 };
        let voters: &[&str] = if i == 0 { &["ann", "bo"] } else { &["ann", "bo", "cy"] };
        for a in voters {
            lines += &format!("{{\"annotator\":\"{a}\",\"cluster_id\":\"{}\",\"label\":{label}}}\n", c.id);
        }
        if i != 0 {
            expected_rows += c.statement_ids.len();
        }
    }
    fs::write(cfg.parent().unwrap().join("votes.jsonl"), lines).unwrap();
    expected_rows
}

#[test]
fn dataset_evaluate_and_sweep() {
    let (_dir, cfg) = setup("[sweep]\nlengths = [100, 400]\n");
    run_through_detect(&cfg);
    let dir = corpus_dir(&cfg);
    let rows_expected = write_votes(&cfg);

    let report = cherry(&cfg, &["build-dataset"]).unwrap();
    assert_eq!(report.outputs["rows"], rows_expected);
    let rows: Vec<ExportRow> =
        fs::read_to_string(dir.join("dataset.jsonl")).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), rows_expected);
    let train: HashSet<&str> = rows.iter().filter(|r| r.split == cherry_core::dataset::Side::Train).map(|r| r.event_id.as_str()).collect();
    let test: HashSet<&str> = rows.iter().filter(|r| r.split == cherry_core::dataset::Side::Test).map(|r| r.event_id.as_str()).collect();
    assert!(train.is_disjoint(&test) && !train.is_empty() && !test.is_empty());

    let stats = cherry(&cfg, &["stats"]).unwrap();
    assert!(stats.table.as_deref().unwrap().starts_with("| Conf. | Class 1 | Class 2 | Class 3 |"));

    // The lookup scorer against an oracle computed from the rows.
    let important = important();
    let test_rows: Vec<&ExportRow> = rows.iter().filter(|r| r.split == cherry_core::dataset::Side::Test).collect();
    let hits = test_rows.iter().filter(|r| (important.contains(&r.statement_text) as u8 == 1) == (r.class == 1)).count();
    cherry(&cfg, &["evaluate"]).unwrap();
    let out: EvaluateOutput = serde_json::from_str(&fs::read_to_string(dir.join("evaluate.json")).unwrap()).unwrap();
    assert_eq!(out.rows, test_rows.len());
    assert_eq!(out.report.accuracy, hits as f64 / test_rows.len() as f64);

    cherry(&cfg, &["sweep"]).unwrap();
    let first = fs::read(dir.join("sweep.tsv")).unwrap();
    cherry(&cfg, &["sweep"]).unwrap();
    assert_eq!(fs::read(dir.join("sweep.tsv")).unwrap(), first);
    let tsv = String::from_utf8(first).unwrap();
    assert_eq!(tsv.lines().count(), 3, "{tsv}");
    assert!(tsv.starts_with("Scorer\tContext length\tAccuracy\tMacro F-1\n"));

    cherry(&cfg, &["sweep", "--lengths", "100"]).unwrap();
    assert_eq!(fs::read_to_string(dir.join("sweep.tsv")).unwrap().lines().count(), 2);

    // Rebuilding the dataset invalidates evaluate and sweep outputs.
    cherry(&cfg, &["build-dataset"]).unwrap();
    assert!(!dir.join("evaluate.json").exists() && !dir.join("sweep.tsv").exists());
}

#[test]
fn sweep_records_a_failing_scorer_and_continues() {
    let (_dir, cfg) = setup(
        r#"[sweep]
lengths = [100]
[[sweep.scorers]]
kind = "remote"
url = "http://127.0.0.1:9"
timeout_secs = 1
retry = { max_attempts = 1, backoff_base = 0 }
[[sweep.scorers]]
kind = "lexrank"
"#,
    );
    run_through_detect(&cfg);
    write_votes(&cfg);
    cherry(&cfg, &["build-dataset"]).unwrap();
    let report = cherry(&cfg, &["sweep"]).unwrap();
    assert_eq!(report.outputs["cells"], 2);
    assert_eq!(report.outputs["failed"], 1);
}

fn dataset_row(class: u8, split: &str) -> String {
    format!(
        "{{\"statement_text\":\"s\",\"context_text\":\"c\",\"label\":{class},\"class\":{class},\"event_id\":\"e\",\"split\":\"{split}\"}}\n"
    )
}

#[test]
fn evaluate_given_predictions_matches_the_confusion_matrix() {
    let (dir, cfg) = setup("");
    // Gold over the test rows: 1 1 1 2 2 2 2; predictions: 1 1 2 2 2 1 2.
    let gold = [1, 1, 1, 2, 2, 2, 2];
    let mut data: String = gold.iter().map(|c| dataset_row(*c, "test")).collect();
    data += &dataset_row(1, "train");
    let data_path = dir.path().join("rows.jsonl");
    fs::write(&data_path, data).unwrap();
    let pred_path = dir.path().join("pred.txt");
    fs::write(&pred_path, "1\n1\n2\n2\n2\n1\n2\n").unwrap();

    let cli = Cli::try_parse_from([
        "cherry",
        "--config",
        cfg.to_str().unwrap(),
        "evaluate",
        "--dataset",
        data_path.to_str().unwrap(),
        "--predictions",
        pred_path.to_str().unwrap(),
    ])
    .unwrap();
    assert!(matches!(cli.command, Command::Evaluate { split: SplitArg::Test, .. }));
    let report = run(&cli).unwrap();
    let out: EvaluateOutput = serde_json::from_str(&fs::read_to_string(corpus_dir(&cfg).join("evaluate.json")).unwrap()).unwrap();
    // Class 1: tp 2, fp 1, fn 1. Class 2: tp 3, fp 1, fn 1.
    let f1_1 = 2.0 * (2.0 / 3.0) * (2.0 / 3.0) / (4.0 / 3.0);
    let f1_2 = 2.0 * 0.75 * 0.75 / 1.5;
    assert_eq!(out.report.confusion, [[2, 1], [1, 3]]);
    assert_eq!(out.report.accuracy, 5.0 / 7.0);
    assert!((out.report.macro_f1 - (f1_1 + f1_2) / 2.0).abs() < 1e-12);
    assert_eq!(report.outputs["accuracy"], 5.0 / 7.0);
    assert!(report.table.unwrap().contains("| 1 | 0.714 |"));

    // A misaligned prediction file is a runtime failure.
    fs::write(&pred_path, "1\n2\n").unwrap();
    let err = cherry(&cfg, &["evaluate", "--dataset", data_path.to_str().unwrap(), "--predictions", pred_path.to_str().unwrap()])
        .unwrap_err();
    assert_eq!(err.exit_code(), 4);
    let err = cherry(&cfg, &["evaluate", "--dataset", "/nonexistent.jsonl"]).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[cfg(unix)]
#[test]
fn annotator_survives_a_hard_kill() {
    let (dir, cfg) = setup("[annotate]\nbind = \"127.0.0.1:0\"\nroster = \"roster.json\"\n");
    fs::write(dir.path().join("roster.json"), r#"[{"annotator": "ann", "token": "tok-ann"}]"#).unwrap();
    for stage in ["ingest", "segment", "cluster-events", "cluster-statements"] {
        cherry(&cfg, &[stage]).unwrap();
    }
    let event = load_corpus(&corpus_dir(&cfg)).unwrap().events[0].id.clone();
    let client = reqwest::blocking::Client::new();

    let start = || {
        let mut child = Process::new(env!("CARGO_BIN_EXE_cherry"))
            .args(["--config", cfg.to_str().unwrap(), "serve-annotator"])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let base = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("{line:?}")).to_string();
        (child, base)
    };
    let next = |base: &str| -> serde_json::Value {
        client
            .get(format!("{base}/events/{event}/next?annotator=ann"))
            .bearer_auth("tok-ann")
            .send()
            .unwrap()
            .json()
            .unwrap()
    };

    let (mut child, base) = start();
    let first = next(&base);
    let cluster = first["cluster"]["cluster_id"].as_str().unwrap().to_string();
    let resp = client
        .post(format!("{base}/labels"))
        .bearer_auth("tok-ann")
        .json(&serde_json::json!({"annotator": "ann", "cluster_id": cluster, "label": 1}))
        .send()
        .unwrap();
    assert!(resp.status().is_success(), "{}", resp.status());
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(corpus_dir(&cfg).join(".cherry.lock").exists());

    // The dead process's lock is taken over and the vote is still there.
    let (mut child, base) = start();
    let resumed = next(&base);
    assert_eq!(resumed["progress"]["labeled"], 1);
    assert_ne!(resumed["cluster"]["cluster_id"], first["cluster"]["cluster_id"]);
    child.kill().unwrap();
    child.wait().unwrap();
}
