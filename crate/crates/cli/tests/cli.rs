use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use utterancesmith::extract::FormatHint;
use utterancesmith_service::store::GenerateRequest;
use utterancesmith_service::Store;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_utterancesmith"));
    cmd.env_remove("UTTERANCESMITH_STORE");
    cmd
}

fn core_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core")
}

fn fig3() -> PathBuf {
    core_dir().join("tests/fixtures/fig3.yaml")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn extract_prints_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let seeds_out = dir.path().join("seeds.json");
    let out = run(&["extract", path_str(&fig3()), "--seeds-out", path_str(&seeds_out)]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("\"list the process instances\""));
    let seeds: Value = serde_json::from_str(&std::fs::read_to_string(&seeds_out).unwrap()).unwrap();
    assert_eq!(seeds[0]["text"], "list the process instances");
    assert_eq!(seeds[0]["intent_id"], "get:/process-instances");
}

#[test]
fn usage_errors_exit_2() {
    let out = run(&["select", "candidates.json"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("--seed-text"));
    assert!(stderr.contains("Usage"));
    assert!(out.stdout.is_empty());

    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1_with_code() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("one.csv");
    std::fs::write(&csv, "text,intent\nbook a flight,travel\n").unwrap();
    let out = run(&["train", path_str(&csv)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("error[TooFewIntents]"));

    let spec = dir.path().join("bad.yaml");
    std::fs::write(&spec, "paths: [").unwrap();
    let out = run(&["extract", path_str(&spec)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn train_and_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = core_dir().join("data/synth.csv");
    let split = core_dir().join("data/synth.split.json");
    let model = dir.path().join("model.json");
    let out = run(&["train", path_str(&data), "--split", path_str(&split), "--out", path_str(&model)]);
    assert!(out.status.success());
    let report = stdout_json(&run(&["evaluate", path_str(&model), path_str(&data), "--split", path_str(&split)]));
    assert_eq!(report["n_test"], 160);
    let acc = report["accuracy"].as_f64().unwrap();
    assert!((0.5..=1.0).contains(&acc), "{acc}");
}

#[test]
fn experiment_table1_shape() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.json");
    let body = json!({
        "dataset": core_dir().join("data/synth.csv"),
        "n_values": [1, 2, 4, 8],
        "input_types": ["diverse", "random", "narrow"],
        "pipeline_configs": ["base"],
        "seeds": [0]
    });
    std::fs::write(&config, body.to_string()).unwrap();
    let out = run(&["experiment", path_str(&config), "--report", "table1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 1 + 3);
    assert_eq!(lines[1].split_whitespace().collect::<Vec<_>>(), ["n=1", "n=2", "n=4", "n=8"]);
    for (line, label) in lines[2..].iter().zip(["diverse", "random", "narrow"]) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(cols.len(), 5);
        assert_eq!(cols[0], label);
    }

    let out = run(&["experiment", path_str(&config), "--report", "table1", "--csv"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 1 + 12);
}

#[test]
fn seeded_generation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds.json");
    assert!(run(&["extract", path_str(&fig3()), "--seeds-out", path_str(&seeds)]).status.success());
    let config = dir.path().join("gen.json");
    std::fs::write(&config, r#"{"generators": [{"id": "rule", "kind": "builtin_rule"}]}"#).unwrap();
    let a = run(&["--seed", "7", "generate", path_str(&seeds), "--config", path_str(&config)]);
    let b = run(&["generate", path_str(&seeds), "--config", path_str(&config), "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let out: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(!out["candidates"].as_array().unwrap().is_empty());
}

/// The CLI stages and the service produce the same seeds and selections.
#[test]
fn cli_matches_service() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{
      "openapi": "3.0.0",
      "paths": {
        "/orders": {"get": {"operationId": "listOrders", "summary": "Lists all orders"}},
        "/orders/{id}": {"delete": {"operationId": "deleteOrder"}}
      }
    }"#;
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, spec).unwrap();

    let store = Store::open(dir.path().join("store")).unwrap();
    let project = store.create_project("p").unwrap();
    store.ingest_spec(&project.project_id, spec.as_bytes(), FormatHint::Auto).unwrap();
    let service_out = store.generate(&project.project_id, &GenerateRequest::default()).unwrap();

    let seeds_path = dir.path().join("seeds.json");
    assert!(run(&["extract", path_str(&spec_path), "--seeds-out", path_str(&seeds_path)]).status.success());
    let seeds: Value = serde_json::from_str(&std::fs::read_to_string(&seeds_path).unwrap()).unwrap();
    let cli_seed_texts: Vec<&str> = seeds.as_array().unwrap().iter().map(|s| s["text"].as_str().unwrap()).collect();
    let service_seed_texts: Vec<String> = store
        .operations(&project.project_id)
        .unwrap()
        .into_iter()
        .flat_map(|o| o.seeds)
        .collect();
    assert_eq!(cli_seed_texts, service_seed_texts);

    let config = dir.path().join("gen.json");
    std::fs::write(&config, r#"[{"id": "rule", "kind": "builtin_rule"}]"#).unwrap();
    let cands = dir.path().join("cands.json");
    assert!(run(&["generate", path_str(&seeds_path), "--config", path_str(&config), "--out", path_str(&cands)])
        .status
        .success());
    let mut cli_selected = Vec::new();
    for seed in &cli_seed_texts {
        let trace = stdout_json(&run(&["select", path_str(&cands), "--seed-text", seed]));
        for c in trace["selected"].as_array().unwrap() {
            cli_selected.push(c["text"].as_str().unwrap().to_string());
        }
    }
    let service_selected: Vec<String> = service_out.selected.iter().map(|c| c.candidate.text.clone()).collect();
    assert!(!service_selected.is_empty());
    assert_eq!(cli_selected, service_selected);
}
