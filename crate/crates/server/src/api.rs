//! REST handlers. All times in requests and responses are session master
//! seconds unless a field says `local`.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use chrono::{DateTime, NaiveDate, Utc};
use pianoview_core::catalog::{
    self, CatalogIndex, CatalogQuery, Measure, SessionRecord, SessionStatus, Skill, StatusSummary,
};
use pianoview_core::midi::ParseWarning;
use pianoview_core::motion::{Axis, Position, SeriesPoint, Skeleton};
use pianoview_core::playback::{self, RollNote, Side, DEFAULT_ROLL_HALF_WIDTH_S};
use pianoview_core::timeline::{ClockMap, ModalityKind};
use pianoview_core::PlaybackState;
use serde::{Deserialize, Serialize};

use crate::assets;
use crate::error::ApiError;
use crate::AppState;

pub const DEFAULT_SERIES_POINTS: usize = 500;

type Params = Query<HashMap<String, String>>;

/// Query parameter `name`; an empty value counts as absent.
fn param<T: FromStr>(params: &HashMap<String, String>, name: &str) -> Result<Option<T>, ApiError>
where
    T::Err: std::fmt::Display,
{
    match params.get(name).map(|v| v.trim()).filter(|v| !v.is_empty()) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|e| ApiError::BadRequest(format!("{name}={v:?}: {e}"))),
    }
}

fn required<T: FromStr>(params: &HashMap<String, String>, name: &str) -> Result<T, ApiError>
where
    T::Err: std::fmt::Display,
{
    param(params, name)?.ok_or_else(|| ApiError::BadRequest(format!("missing query parameter {name}")))
}

fn asset_url(id: &str, file: &str) -> String {
    format!("/assets/{id}/{file}")
}

fn find<'a>(index: &'a CatalogIndex, id: &str) -> Result<&'a SessionRecord, ApiError> {
    index
        .get(id)
        .ok_or_else(|| ApiError::NotFound(format!("session {id:?} not found")))
}

/// Derived views are only served for Ready sessions.
fn find_ready<'a>(index: &'a CatalogIndex, id: &str) -> Result<&'a SessionRecord, ApiError> {
    let record = find(index, id)?;
    if !record.is_ready() {
        return Err(ApiError::NotReady(format!("session {id:?} is {}", record.status)));
    }
    Ok(record)
}

fn motion_clock(record: &SessionRecord) -> Result<ClockMap, ApiError> {
    match (&record.data.motion, record.manifest.clock(ModalityKind::Motion)) {
        (Some(_), Some(clock)) => Ok(clock),
        _ => Err(ApiError::NotReady(format!("session {:?} has no motion data", record.id))),
    }
}

#[derive(Debug, Serialize)]
pub struct SessionSummary<'a> {
    pub id: &'a str,
    pub performer_name: &'a str,
    pub skill: Option<Skill>,
    pub recorded_date: Option<NaiveDate>,
    pub piece: &'a str,
    pub status: SessionStatus,
    pub duration_s: Option<f64>,
    pub modalities: Vec<ModalityKind>,
    pub warning_count: usize,
    pub thumbnail_url: Option<String>,
}

impl<'a> From<&'a SessionRecord> for SessionSummary<'a> {
    fn from(r: &'a SessionRecord) -> Self {
        SessionSummary {
            id: &r.id,
            performer_name: &r.performer_name,
            skill: r.skill,
            recorded_date: r.recorded_date,
            piece: &r.piece,
            status: r.status,
            duration_s: r.duration_s,
            modalities: r.manifest.tracks().map(|t| t.kind).collect(),
            warning_count: r.warnings.len(),
            thumbnail_url: r.assets.thumbnail.as_deref().map(|f| asset_url(&r.id, f)),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SessionList<'a> {
    pub sessions: Vec<SessionSummary<'a>>,
    /// Counts over the whole catalog, not just the filtered sessions.
    pub summary: StatusSummary,
    pub scanned_at: DateTime<Utc>,
}

pub async fn list_sessions(State(app): State<AppState>, Query(params): Params) -> Result<Response, ApiError> {
    let query = CatalogQuery {
        skill: param(&params, "skill")?,
        date_from: param(&params, "date_from")?,
        date_to: param(&params, "date_to")?,
        performer_substring: param(&params, "performer")?,
    };
    let ready_only = param::<bool>(&params, "ready_only")?.unwrap_or(false);
    let index = app.catalog.snapshot();
    let sessions = catalog::filter_sessions(&index, &query, ready_only)?;
    Ok(Json(SessionList {
        sessions: sessions.into_iter().map(SessionSummary::from).collect(),
        summary: index.summary(),
        scanned_at: index.scanned_at(),
    })
    .into_response())
}

#[derive(Debug, Serialize)]
pub struct SessionDetail<'a> {
    #[serde(flatten)]
    pub record: &'a SessionRecord,
    pub skeleton: Option<&'a Skeleton>,
    pub joint_names: &'a [String],
    pub motion_rate_hz: Option<f64>,
    pub video_fps: Option<f64>,
    pub measures: &'a [Measure],
    pub note_count: usize,
    pub midi_warnings: &'a [ParseWarning],
    pub asset_urls: BTreeMap<String, String>,
}

pub async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let index = app.catalog.snapshot();
    let r = find(&index, &id)?;
    let motion = r.data.motion.as_ref();
    let midi = r.data.midi.as_ref();
    let mut asset_urls = BTreeMap::new();
    for (kind, file) in &r.assets.files {
        asset_urls.insert(kind.as_str().to_string(), asset_url(&r.id, file));
    }
    for (key, file) in [("skeleton", &r.assets.skeleton), ("thumbnail", &r.assets.thumbnail), ("measure_map", &r.assets.measure_map)] {
        if let Some(file) = file {
            asset_urls.insert(key.to_string(), asset_url(&r.id, file));
        }
    }
    for (i, page) in r.assets.score_pages.iter().enumerate() {
        asset_urls.insert(format!("score_page_{}", i + 1), asset_url(&r.id, page));
    }
    let detail = SessionDetail {
        record: r,
        skeleton: motion.map(|m| &m.skeleton),
        joint_names: motion.map_or(&[][..], |m| m.clip.joint_names()),
        motion_rate_hz: motion.map(|m| m.clip.rate_hz()),
        video_fps: r.data.video_fps,
        measures: &r.data.measures,
        note_count: midi.map_or(0, |m| m.notes.len()),
        midi_warnings: midi.map_or(&[][..], |m| &m.warnings),
        asset_urls,
    };
    Ok(Json(detail).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PianoRoll {
    pub t0: f64,
    pub t1: f64,
    pub notes: Vec<RollNote>,
}

pub async fn pianoroll(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(params): Params,
) -> Result<Json<PianoRoll>, ApiError> {
    let (t0, t1): (f64, f64) = (required(&params, "t0")?, required(&params, "t1")?);
    let index = app.catalog.snapshot();
    let record = find_ready(&index, &id)?;
    let notes = playback::piano_roll_master(record, t0, t1)?;
    Ok(Json(PianoRoll { t0, t1, notes }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Pose {
    pub t: f64,
    pub local_t: f64,
    pub joints: Vec<String>,
    pub positions: Vec<Position>,
}

pub async fn pose(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(params): Params,
) -> Result<Json<Pose>, ApiError> {
    let t: f64 = required(&params, "t")?;
    let index = app.catalog.snapshot();
    let record = find_ready(&index, &id)?;
    let clock = motion_clock(record)?;
    let clip = &record.data.motion.as_ref().expect("checked by motion_clock").clip;
    let local_t = clock.to_local(t);
    let positions = clip.pose_at(local_t).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(Json(Pose {
        t,
        local_t,
        joints: clip.joint_names().to_vec(),
        positions,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Series {
    pub joint: String,
    pub axis: Axis,
    pub points: Vec<SeriesPoint>,
}

pub async fn series(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(params): Params,
) -> Result<Json<Series>, ApiError> {
    let joint: String = required(&params, "joint")?;
    let axis: Axis = required(&params, "axis")?;
    let (t0, t1): (f64, f64) = (required(&params, "t0")?, required(&params, "t1")?);
    let max_points = param(&params, "max_points")?.unwrap_or(DEFAULT_SERIES_POINTS);
    let index = app.catalog.snapshot();
    let record = find_ready(&index, &id)?;
    let clock = motion_clock(record)?;
    let clip = &record.data.motion.as_ref().expect("checked by motion_clock").clip;
    let points = clip
        .joint_series(&joint, axis, clock.to_local(t0), clock.to_local(t1), max_points)
        .map_err(|e| ApiError::BadRequest(e.to_string()))?
        .into_iter()
        .map(|p| SeriesPoint {
            t: clock.to_master(p.t),
            v: p.v,
        })
        .collect();
    Ok(Json(Series { joint, axis, points }))
}

pub async fn rescan(State(app): State<AppState>) -> Result<Json<StatusSummary>, ApiError> {
    let catalog = app.catalog.clone();
    let index = tokio::task::spawn_blocking(move || catalog.rescan())
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(index.summary()))
}

#[derive(Debug, Deserialize)]
pub struct CreatePlayback {
    pub sources: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlaybackInfo {
    pub playback_id: String,
    pub ws_url: String,
    pub state: PlaybackState,
    pub server_time_ms: u64,
}

fn playback_info(state: PlaybackState, server_time_ms: u64) -> PlaybackInfo {
    PlaybackInfo {
        playback_id: state.playback_id.clone(),
        ws_url: format!("/ws/playbacks/{}", state.playback_id),
        state,
        server_time_ms,
    }
}

pub async fn create_playback(
    State(app): State<AppState>,
    Json(body): Json<CreatePlayback>,
) -> Result<(StatusCode, Json<PlaybackInfo>), ApiError> {
    let id = uuid::Uuid::new_v4().to_string();
    let state = playback::create_playback(&app.catalog.snapshot(), &id, &body.sources)?;
    let snap = app.playbacks.insert(state).snapshot();
    Ok((StatusCode::CREATED, Json(playback_info(snap.state, snap.server_time_ms))))
}

pub async fn get_playback(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<PlaybackInfo>, ApiError> {
    let handle = app
        .playbacks
        .get(&id)
        .ok_or_else(|| ApiError::NotFound(format!("playback {id:?} not found")))?;
    let snap = handle.snapshot();
    Ok(Json(playback_info(snap.state, snap.server_time_ms)))
}

pub async fn playback_frame(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(params): Params,
) -> Result<Json<playback::FrameBundle>, ApiError> {
    let side = match params.get("source").map(String::as_str) {
        None | Some("") | Some("A") => Side::A,
        Some("B") => Side::B,
        Some(other) => return Err(ApiError::BadRequest(format!("source={other:?}: expected A or B"))),
    };
    let half_width = param(&params, "half_width")?.unwrap_or(DEFAULT_ROLL_HALF_WIDTH_S);
    let handle = app
        .playbacks
        .get(&id)
        .ok_or_else(|| ApiError::NotFound(format!("playback {id:?} not found")))?;
    let state = handle.snapshot().state;
    let source = state
        .source(side)
        .ok_or_else(|| ApiError::BadRequest(format!("playback has no source {side:?}")))?;
    let index = app.catalog.snapshot();
    let record = find(&index, &source.session_id)?;
    Ok(Json(playback::frame_bundle(&state, side, record, half_width)?))
}

pub async fn asset(
    State(app): State<AppState>,
    Path((id, file)): Path<(String, String)>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let index = app.catalog.snapshot();
    let record = find(&index, &id)?;
    let path = record
        .assets
        .resolve(&file)
        .ok_or_else(|| ApiError::NotFound(format!("session {id:?} has no asset {file:?}")))?;
    assets::serve_file(&path, &headers).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ApiError::NotFound(format!("asset {file:?} is missing on disk")),
        _ => ApiError::Internal(e.to_string()),
    })
}
