//! JSON shapes of the generator backend protocol.
//!
//! `POST {endpoint}/paraphrase` takes [`ParaphraseRequest`] and answers
//! [`ParaphraseResponse`]; `POST {endpoint}/embed` takes [`EmbedRequest`]
//! and answers [`EmbedResponse`]. Anything other than HTTP 200 is a backend
//! error.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const PARAPHRASE_ROUTE: &str = "/paraphrase";
pub const EMBED_ROUTE: &str = "/embed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseRequest {
    pub sentence: String,
    pub num_return: usize,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCandidate {
    pub text: String,
    #[serde(default)]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseResponse {
    pub candidates: Vec<WireCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_shape() {
        let req = ParaphraseRequest {
            sentence: "list invoices".into(),
            num_return: 3,
            params: Map::new(),
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"sentence":"list invoices","num_return":3,"params":{}}"#
        );
    }

    #[test]
    fn response_score_may_be_null_or_missing() {
        let r: ParaphraseResponse = serde_json::from_str(
            r#"{"candidates":[{"text":"a","score":null},{"text":"b"},{"text":"c","score":0.5}]}"#,
        )
        .unwrap();
        assert_eq!(r.candidates.len(), 3);
        assert_eq!(r.candidates[2].score, Some(0.5));
        assert!(serde_json::from_str::<ParaphraseResponse>(r#"{"items":[]}"#).is_err());
    }
}
