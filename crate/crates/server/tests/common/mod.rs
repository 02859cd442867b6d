#![allow(dead_code)]

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use pianoview_core::SharedCatalog;
use pianoview_server::{router, AppState};
use pianoview_testkit::dataset::{self, GeneratedSession};
use serde_json::Value;
use tempfile::TempDir;
use tower::ServiceExt;

pub struct Fixture {
    pub dir: TempDir,
    pub sessions: Vec<GeneratedSession>,
    pub state: AppState,
}

impl Fixture {
    pub fn mixed(n: usize, seed: u64) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let sessions = dataset::generate_dataset(dir.path(), n, seed).unwrap();
        let state = AppState::new(SharedCatalog::open(dir.path()).unwrap());
        Fixture { dir, sessions, state }
    }

    pub fn app(&self) -> Router {
        router(self.state.clone())
    }

    pub fn ready_ids(&self) -> Vec<String> {
        self.sessions
            .iter()
            .filter(|s| s.plan.outcome == dataset::Outcome::Ready)
            .map(|s| s.plan.id.clone())
            .collect()
    }
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!("{e}: {}", String::from_utf8_lossy(&self.body));
        })
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(name).and_then(|v| v.to_str().ok())
    }
}

pub async fn request(app: Router, req: Request<Body>) -> Reply {
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body }
}

pub async fn get(app: Router, uri: &str) -> Reply {
    request(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

pub async fn get_range(app: Router, uri: &str, range: &str) -> Reply {
    request(app, Request::get(uri).header("range", range).body(Body::empty()).unwrap()).await
}

pub async fn post_json(app: Router, uri: &str, body: Value) -> Reply {
    let req = Request::builder()
        .method(Method::POST)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    request(app, req).await
}

/// Brute-force piano-roll oracle over the generator's master-time notes:
/// sorted `(pitch, onset, offset)` of notes sounding within `[t0, t1)`.
pub fn roll_oracle(session: &GeneratedSession, t0: f64, t1: f64) -> Vec<(u8, f64, f64)> {
    let mut v: Vec<_> = session
        .notes_master
        .iter()
        .filter(|(on, off, _)| *on < t1 && *off > t0)
        .map(|&(on, off, p)| (p, on, off))
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn roll_from_json(notes: &Value) -> Vec<(u8, f64, f64)> {
    let mut v: Vec<_> = notes
        .as_array()
        .unwrap()
        .iter()
        .map(|n| {
            (
                n["pitch"].as_u64().unwrap() as u8,
                n["onset_s"].as_f64().unwrap(),
                n["offset_s"].as_f64().unwrap(),
            )
        })
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn rolls_match(got: &[(u8, f64, f64)], want: &[(u8, f64, f64)], tol: f64) -> bool {
    got.len() == want.len()
        && got
            .iter()
            .zip(want)
            .all(|(g, w)| g.0 == w.0 && (g.1 - w.1).abs() <= tol && (g.2 - w.2).abs() <= tol)
}
