use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use pianoview_core::catalog::CatalogError;
use pianoview_core::playback::PlaybackError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    /// The session exists but is not Ready.
    #[error("{0}")]
    NotReady(String),
    #[error("{0}")]
    Conflict(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::NotReady(_) | ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!("{self}");
        }
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

impl From<PlaybackError> for ApiError {
    fn from(e: PlaybackError) -> Self {
        match e {
            PlaybackError::NotFound(_) => ApiError::NotFound(e.to_string()),
            PlaybackError::NotReady { .. } => ApiError::NotReady(e.to_string()),
            PlaybackError::InvalidState(_) => ApiError::Conflict(e.to_string()),
            PlaybackError::SourceCount(_) | PlaybackError::InvalidRange { .. } | PlaybackError::InvalidArgument(_) => {
                ApiError::BadRequest(e.to_string())
            }
        }
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::InvalidQuery(_) => ApiError::BadRequest(e.to_string()),
            CatalogError::UnreadableRoot { .. } => ApiError::Internal(e.to_string()),
        }
    }
}
