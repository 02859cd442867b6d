//! HTTP and WebSocket front end for the pianoview dataset service.

pub mod api;
pub mod assets;
pub mod coordinator;
pub mod error;
pub mod report;
pub mod wire;
pub mod ws;

use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use pianoview_core::SharedCatalog;

use crate::coordinator::PlaybackRegistry;

#[derive(Debug, Clone)]
pub struct AppState {
    pub catalog: Arc<SharedCatalog>,
    pub playbacks: Arc<PlaybackRegistry>,
}

impl AppState {
    pub fn new(catalog: SharedCatalog) -> Self {
        AppState {
            catalog: Arc::new(catalog),
            playbacks: Arc::new(PlaybackRegistry::default()),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/sessions", get(api::list_sessions))
        .route("/api/sessions/{id}", get(api::get_session))
        .route("/api/sessions/{id}/pianoroll", get(api::pianoroll))
        .route("/api/sessions/{id}/pose", get(api::pose))
        .route("/api/sessions/{id}/series", get(api::series))
        .route("/api/rescan", post(api::rescan))
        .route("/api/playbacks", post(api::create_playback))
        .route("/api/playbacks/{id}", get(api::get_playback))
        .route("/api/playbacks/{id}/frame", get(api::playback_frame))
        .route("/assets/{id}/{*file}", get(api::asset))
        .route("/ws/playbacks/{id}", get(ws::playback_channel))
        .with_state(state)
}
