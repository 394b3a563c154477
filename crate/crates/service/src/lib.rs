//! HTTP service for the review loop: upload a spec, generate candidates,
//! review them, train and probe a classifier, export training data.

pub mod api;
pub mod error;
pub mod mock;
pub mod store;

use std::path::PathBuf;
use std::sync::Arc;

pub use api::router;
pub use error::ServiceError;
pub use mock::mock_router;
pub use store::Store;

/// Serve the API on `listener` until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, store: Store, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    axum::serve(listener, router(Arc::new(store), ui_dir)).await
}

/// Serve the reference paraphrase backend on `listener`.
pub async fn serve_mock(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, mock_router()).await
}
