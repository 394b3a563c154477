//! Reference paraphrase/embedding backend speaking the generator wire
//! protocol. Paraphrases come from the rule paraphraser, vectors from the
//! hashing embedder.
//!
//! The `fail_status` request param (an HTTP status code) makes
//! `/paraphrase` answer with that status instead, for exercising client
//! error handling.

use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::Value;
use utterancesmith::generation::{paraphrase_rule_based, SynonymLexicon};
use utterancesmith::wire::{
    EmbedRequest, EmbedResponse, ParaphraseRequest, ParaphraseResponse, WireCandidate, EMBED_ROUTE, PARAPHRASE_ROUTE,
};
use utterancesmith::{Embedder, HashEmbedder};

pub fn mock_router() -> Router {
    Router::new()
        .route(PARAPHRASE_ROUTE, post(paraphrase))
        .route(EMBED_ROUTE, post(embed))
        .with_state(Arc::new(SynonymLexicon::builtin()))
}

async fn paraphrase(State(lexicon): State<Arc<SynonymLexicon>>, Json(req): Json<ParaphraseRequest>) -> Response {
    if let Some(status) = req
        .params
        .get("fail_status")
        .and_then(Value::as_u64)
        .and_then(|s| StatusCode::from_u16(s as u16).ok())
    {
        return (status, "requested failure").into_response();
    }
    let seed_rng = req.params.get("seed_rng").and_then(Value::as_u64).unwrap_or(0);
    let texts = if req.num_return == 0 {
        Vec::new()
    } else {
        paraphrase_rule_based(&req.sentence, &lexicon, req.num_return, seed_rng).unwrap_or_default()
    };
    let candidates = texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| WireCandidate {
            text,
            score: Some(1.0 / (i as f64 + 1.0)),
        })
        .collect();
    Json(ParaphraseResponse { candidates }).into_response()
}

async fn embed(Json(req): Json<EmbedRequest>) -> Json<EmbedResponse> {
    let embedder = HashEmbedder::default();
    Json(EmbedResponse {
        vectors: req.texts.iter().map(|t| embedder.embed(t).values().to_vec()).collect(),
    })
}
