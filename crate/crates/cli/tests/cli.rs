use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chrono::{DateTime, Utc};
use keyprosody::pipeline::{infer_plan, judgment_file_agreement};
use keyprosody_core::collection::Judgment;
use keyprosody_core::prosody::ModificationKind;
use keyprosody_core::stats::Dimension;

fn keyprosody(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_keyprosody"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CORPUS: &str = r#"{"version": "1.1", "data": [
  {"title": "A", "paragraphs": [{"context": "The river was wide. The castle stood on a hill.",
    "qas": [{"id": "q1", "question": "What was wide?", "answers": [{"text": "river", "answer_start": 4}]},
            {"id": "q2", "question": "What stood on a hill?", "answers": [{"text": "castle", "answer_start": 24}]}]}]},
  {"title": "B", "paragraphs": [{"context": "A falcon flew over the harbor.",
    "qas": [{"id": "q3", "question": "What flew?", "answers": [{"text": "falcon", "answer_start": 2}]},
            {"id": "q4", "question": "Flew over what?", "answers": [{"text": "harbor", "answer_start": 23}]}]}]}
]}"#;

fn workspace(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("corpus.json"), CORPUS).unwrap();
    fs::write(dir.path().join("keyprosody.json"), config).unwrap();
    dir
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = keyprosody(dir.path(), &["ingest"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error[config]: "), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn stages_out_of_order_name_the_missing_stage() {
    let dir = workspace(r#"{"corpus_path": "corpus.json"}"#);
    let o = keyprosody(dir.path(), &["plan"]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.starts_with("error[missing-artifact]: "), "{err}");
    assert!(err.contains("run `ingest` first"), "{err}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = workspace(r#"{"corpus_path": "corpus.json", "group_sise": 3}"#);
    let o = keyprosody(dir.path(), &["ingest"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn missing_corpus_is_a_corpus_error() {
    let dir = workspace(r#"{"corpus_path": "nope.json"}"#);
    let o = keyprosody(dir.path(), &["ingest"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("error[corpus]: "));
}

#[test]
fn too_few_items_for_the_plan() {
    let dir = workspace(r#"{"corpus_path": "corpus.json", "group_size": 2}"#);
    assert!(keyprosody(dir.path(), &["ingest"]).status.success());
    let o = keyprosody(dir.path(), &["plan"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("error[corpus]"), "{}", stderr(&o));
}

#[test]
fn serve_needs_a_single_profile() {
    let dir = workspace(r#"{"corpus_path": "corpus.json"}"#);
    let o = keyprosody(dir.path(), &["serve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--engine"));
}

#[test]
fn unknown_engine_is_rejected() {
    let dir = workspace(r#"{"corpus_path": "corpus.json"}"#);
    let o = keyprosody(dir.path(), &["--engine", "acme", "ingest"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn small_run_with_one_profile_and_csv() {
    let dir = workspace(
        r#"{"corpus_path": "corpus.json", "group_size": 1, "kinds": ["pause"],
            "gold_traps": 1, "off_topic_traps": 1, "target_judgments_per_item": 2,
            "simulation": {"workers": 4, "spammers": 0}}"#,
    );
    let o = keyprosody(dir.path(), &["--engine", "google-wavenet-f", "--format", "csv", "all"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let report = fs::read_to_string(out.join("report_google-wavenet-f_overall.csv")).unwrap();
    assert!(report.starts_with("kind,dimension,delta,stars,n\r\n"), "{report}");
    assert!(!out.join("report_ibm-lisa_overall.csv").exists());
    let judgments = fs::read_to_string(out.join("judgments_google-wavenet-f.jsonl")).unwrap();
    // one planned item, baseline + pause, two judgments each; a worker hears
    // only one version of a question, so four workers are needed
    let real: Vec<Judgment> = judgments
        .lines()
        .map(|l| serde_json::from_str::<Judgment>(l).unwrap())
        .filter(|j| !j.is_trap)
        .collect();
    assert_eq!(real.len(), 4);
    let workers: std::collections::BTreeSet<&str> = real.iter().map(|j| j.worker_id.as_str()).collect();
    assert_eq!(workers.len(), 4);
}

fn judgment(worker: &str, item: &str, kind: ModificationKind, inf: i32) -> Judgment {
    Judgment {
        worker_id: worker.into(),
        item_id: item.into(),
        kind,
        informativeness: inf,
        elocution: 1,
        interruption: 0,
        length_rating: 0,
        typed_key: "k".into(),
        is_trap: false,
        timestamp: DateTime::<Utc>::from_timestamp(0, 0).unwrap(),
    }
}

#[test]
fn external_judgment_files_group_by_modified_kind() {
    use ModificationKind::*;
    let mut js = Vec::new();
    for (item, kind) in [("i1", Pause), ("i2", Pause), ("i3", Rate)] {
        for (w, shift) in [("w1", 0), ("w2", 0), ("w3", 1)] {
            js.push(judgment(w, item, Baseline, 1 + shift));
            js.push(judgment(w, item, kind, 2 + shift));
        }
    }
    let mut trap = judgment("w1", "trap", Baseline, 0);
    trap.is_trap = true;
    js.push(trap);

    let plan = infer_plan(&js);
    assert_eq!(plan.groups[&Pause], vec!["i1".to_string(), "i2".to_string()]);
    assert_eq!(plan.groups[&Rate], vec!["i3".to_string()]);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("j.jsonl");
    fs::write(&path, keyprosody_core::jsonl::to_string(&js)).unwrap();
    let (rows, table, summary) = judgment_file_agreement(&path).unwrap();
    assert_eq!(rows, 18);
    let pause_inf = table
        .iter()
        .find(|r| r.group == Pause && r.dimension == Dimension::Informativeness)
        .unwrap();
    assert_eq!(pause_inf.n_units, 4);
    // every unit has two of three raters agreeing
    assert_eq!(pause_inf.majority_ratio, Some(1.0));
    let eloc = summary.iter().find(|s| s.dimension == Dimension::Elocution).unwrap();
    // constant ratings leave alpha undefined
    assert_eq!(eloc.alpha_min, None);
}
