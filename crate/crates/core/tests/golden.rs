use std::path::PathBuf;

use serde_json::Value;
use utterancesmith::dataset::{read_split, synthetic_dataset, LabeledDataset, SYNTHETIC_SEED};
use utterancesmith::experiment::ExperimentConfig;
use utterancesmith::extract::{extract_document, ExtractOptions, FormatHint, Scenario};
use utterancesmith::{Embedder, HashEmbedder};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn embedding_matches_golden_bits() {
    let golden: Value = serde_json::from_str(&std::fs::read_to_string(fixture("embed_golden.json")).unwrap()).unwrap();
    let embedder = HashEmbedder::default();
    let vectors = golden["vectors"].as_array().unwrap();
    assert!(vectors.len() >= 5);
    for entry in vectors {
        let text = entry["text"].as_str().unwrap();
        let expected: Vec<u64> = entry["bits"]
            .as_array()
            .unwrap()
            .iter()
            .map(|b| u64::from_str_radix(b.as_str().unwrap(), 16).unwrap())
            .collect();
        let got: Vec<u64> = embedder.embed(text).values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(got, expected, "{text:?}");
    }
}

#[test]
fn fig3_extraction_matches_golden() {
    let raw = std::fs::read(fixture("fig3.yaml")).unwrap();
    let extraction = extract_document(&raw, FormatHint::Auto, &ExtractOptions::default()).unwrap();
    assert_eq!(extraction.operations.len(), 1);
    let op = &extraction.operations[0];
    assert_eq!(op.intent_id, "get:/process-instances");
    assert_eq!(op.phrases[0].verb, "list");
    assert_eq!(op.phrases[0].object_text(), "process instances");
    assert_eq!(op.phrases[0].scenario, Scenario::OperationId);

    let golden: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(fixture("fig3.seeds.json")).unwrap()).unwrap();
    let got: Vec<(String, String)> = extraction
        .seeds()
        .map(|s| (s.text.clone(), s.intent_id.clone()))
        .collect();
    let want: Vec<(String, String)> = golden
        .iter()
        .map(|g| (g["text"].as_str().unwrap().to_string(), g["intent_id"].as_str().unwrap().to_string()))
        .collect();
    assert_eq!(got, want);
}

#[test]
fn bundled_synthetic_files_match_generator() {
    let generated = synthetic_dataset(SYNTHETIC_SEED);
    let loaded = LabeledDataset::load(&data("synth.csv"), None).unwrap();
    assert_eq!(loaded.rows, generated.rows);
    assert_eq!(loaded.split, generated.split);
    assert_eq!(read_split(&data("synth.split.json")).unwrap(), generated.split);
}

#[test]
fn bundled_config_resolves_paths() {
    let config = ExperimentConfig::load(&data("synth.json")).unwrap();
    assert!(config.dataset.ends_with("data/synth.csv"));
    assert!(config.dataset.exists());
    assert_eq!(config.generators.len(), 2);
    config.validate().unwrap();
}
