use std::net::SocketAddr;
use std::sync::Arc;

use serde_json::json;
use utterancesmith::generation::{
    paraphrase_rule_based, run_ensemble, BackendError, Ensemble, GeneratorSpec, ParaphraseBackend, RemoteEmbedder,
    RemoteParaphraser, SynonymLexicon,
};
use utterancesmith::{Embedder, HashEmbedder, SeedUtterance};

/// Start the mock backend on an ephemeral port in a background runtime.
fn spawn_mock() -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            utterancesmith_service::serve_mock(listener).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

#[test]
fn paraphrase_round_trip() {
    let addr = spawn_mock();
    let spec = GeneratorSpec::remote("mock", &format!("http://{addr}")).with_param("seed_rng", json!(3));
    let client = RemoteParaphraser::new(&spec).unwrap();
    let got = client.paraphrase("list the open invoices", 6).unwrap();
    let want = paraphrase_rule_based("list the open invoices", &SynonymLexicon::builtin(), 6, 3).unwrap();
    assert_eq!(got, want);
    assert!(client.paraphrase("list the open invoices", 0).unwrap().is_empty());
}

#[test]
fn embed_round_trip() {
    let addr = spawn_mock();
    let client = RemoteEmbedder::new("mock", &format!("http://{addr}/"), 2000).unwrap();
    let texts = vec!["book a flight".to_string(), "".to_string()];
    let vectors = client.embed_batch(&texts).unwrap();
    let local = HashEmbedder::default();
    assert_eq!(vectors[0], local.embed("book a flight"));
    assert!(vectors[1].is_zero());

    let table = client.precompute(&texts, HashEmbedder::new(8)).unwrap();
    assert_eq!(table.embed("book a flight").dim(), 256);
    assert_eq!(table.embed("unseen").dim(), 8);
}

#[test]
fn non_200_is_an_error() {
    let addr = spawn_mock();
    let spec = GeneratorSpec::remote("flaky", &format!("http://{addr}")).with_param("fail_status", json!(503));
    let err = RemoteParaphraser::new(&spec).unwrap().paraphrase("x y", 3).unwrap_err();
    assert_eq!(
        err,
        BackendError::Status {
            generator: "flaky".into(),
            status: 503
        }
    );
}

#[test]
fn down_backend_degrades_to_builtin() {
    let seeds = vec![SeedUtterance {
        text: "list the open invoices".into(),
        phrase: None,
        intent_id: "get:/invoices".into(),
    }];
    let specs = vec![
        GeneratorSpec::builtin("rule"),
        GeneratorSpec {
            timeout_ms: 500,
            ..GeneratorSpec::remote("down", "http://127.0.0.1:9")
        },
    ];
    let ensemble = Ensemble::from_specs(&specs, Arc::new(SynonymLexicon::builtin())).unwrap();
    let out = run_ensemble(&seeds, &ensemble).unwrap();
    assert!(!out.candidates.is_empty());
    assert!(out.candidates.iter().all(|c| c.generator_id == "rule"));
    assert_eq!(out.warnings.len(), 1);
    assert_eq!(out.warnings[0].generator_id, "down");
}
