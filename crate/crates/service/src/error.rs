use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use thiserror::Error;
use utterancesmith::classifier::ClassifierError;
use utterancesmith::extract::ExtractError;
use utterancesmith::generation::GenerationError;
use utterancesmith::selection::SelectionConfigError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("project {0} not found")]
    ProjectNotFound(String),
    #[error("unknown candidate {0}")]
    UnknownCandidate(String),
    #[error("unknown operation {0}")]
    UnknownOperation(String),
    #[error("{0}")]
    InvalidRequest(String),
    #[error("no seed utterances to generate from; upload a spec first")]
    NoSeeds,
    #[error("project has no trained model")]
    NoModel,
    #[error("store is not writable: {0}")]
    StoreUnwritable(String),
    #[error("store is corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Selection(#[from] SelectionConfigError),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::ProjectNotFound(_) => "ProjectNotFound",
            ServiceError::UnknownCandidate(_) => "UnknownCandidate",
            ServiceError::UnknownOperation(_) => "UnknownOperation",
            ServiceError::InvalidRequest(_) => "InvalidRequest",
            ServiceError::NoSeeds => "NoSeeds",
            ServiceError::NoModel => "NoModel",
            ServiceError::StoreUnwritable(_) => "StoreUnwritable",
            ServiceError::Corrupt(_) => "StoreCorrupt",
            ServiceError::Extract(e) => e.code(),
            ServiceError::Generation(e) => e.code(),
            ServiceError::Classifier(e) => e.code(),
            ServiceError::Selection(_) => "InvalidSelectionConfig",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::ProjectNotFound(_) | ServiceError::UnknownCandidate(_) | ServiceError::UnknownOperation(_) => {
                StatusCode::NOT_FOUND
            }
            ServiceError::InvalidRequest(_) | ServiceError::Selection(_) => StatusCode::BAD_REQUEST,
            ServiceError::NoSeeds | ServiceError::NoModel => StatusCode::CONFLICT,
            ServiceError::StoreUnwritable(_) | ServiceError::Corrupt(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ServiceError::Extract(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Generation(GenerationError::AllBackendsFailed(_) | GenerationError::Backend(_)) => {
                StatusCode::BAD_GATEWAY
            }
            ServiceError::Generation(_) => StatusCode::BAD_REQUEST,
            ServiceError::Classifier(ClassifierError::EmptyText) => StatusCode::BAD_REQUEST,
            ServiceError::Classifier(_) => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({"error": self.code(), "detail": self.to_string()});
        (self.status(), Json(body)).into_response()
    }
}
