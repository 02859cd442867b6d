//! Dataset catalog.
//!
//! Scans `root/sessions/<id>/session.json`, validates and parses each
//! session's assets, computes the readiness status and answers filter
//! queries for the home page.
//!
//! A session is `Ready` only when audio, MIDI, video and motion are all
//! present and parseable and their master spans share a non-empty overlap.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use chrono::{DateTime, NaiveDate, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::midi::{self, NoteEvent, ParseWarning};
use crate::motion::{self, MotionClip, Skeleton};
use crate::timeline::{ClockMap, ModalityKind, ModalityTrack, Span, SyncManifest};

pub const SESSION_FILE: &str = "session.json";
pub const DEFAULT_SKELETON_FILE: &str = "skeleton.json";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("dataset root {path} is not readable: {source}")]
    UnreadableRoot { path: PathBuf, source: io::Error },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Skill {
    Amateur,
    Professional,
}

impl FromStr for Skill {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "amateur" => Ok(Skill::Amateur),
            "professional" => Ok(Skill::Professional),
            _ => Err(CatalogError::InvalidQuery(format!("unknown skill {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Incomplete,
    Unaligned,
    Ready,
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionStatus::Incomplete => "incomplete",
            SessionStatus::Unaligned => "unaligned",
            SessionStatus::Ready => "ready",
        })
    }
}

/// One score measure on the master timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub measure: u32,
    pub start_master_s: f64,
    pub end_master_s: f64,
    pub page: u32,
}

/// Measure containing `master_t`, using half-open `[start, end)` ranges.
pub fn measure_at(measures: &[Measure], master_t: f64) -> Option<u32> {
    measures
        .iter()
        .find(|m| master_t >= m.start_master_s && master_t < m.end_master_s)
        .or_else(|| measures.iter().find(|m| master_t == m.end_master_s))
        .map(|m| m.measure)
}

/// Relative asset paths of a session, as referenced by `session.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SessionAssets {
    #[serde(skip)]
    pub dir: PathBuf,
    pub files: BTreeMap<ModalityKind, String>,
    pub skeleton: Option<String>,
    pub thumbnail: Option<String>,
    pub score_pages: Vec<String>,
    pub measure_map: Option<String>,
}

impl SessionAssets {
    /// Resolves `rel` to a path inside the session directory if it is one of
    /// the assets this session references.
    pub fn resolve(&self, rel: &str) -> Option<PathBuf> {
        let known = self.files.values().any(|f| f == rel)
            || self.skeleton.as_deref() == Some(rel)
            || self.thumbnail.as_deref() == Some(rel)
            || self.measure_map.as_deref() == Some(rel)
            || self.score_pages.iter().any(|p| p == rel);
        known.then(|| self.dir.join(rel))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MidiData {
    pub notes: Vec<NoteEvent>,
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionData {
    pub clip: MotionClip,
    pub skeleton: Skeleton,
}

/// Parsed, cached derived data for one session.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionData {
    pub midi: Option<MidiData>,
    pub motion: Option<MotionData>,
    pub measures: Vec<Measure>,
    pub video_fps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionRecord {
    pub id: String,
    pub performer_name: String,
    pub skill: Option<Skill>,
    pub recorded_date: Option<NaiveDate>,
    pub piece: String,
    pub manifest: SyncManifest,
    pub assets: SessionAssets,
    pub status: SessionStatus,
    pub warnings: Vec<String>,
    /// Master-time overlap of the gating modalities, when Ready.
    pub window: Option<Span>,
    pub duration_s: Option<f64>,
    #[serde(skip)]
    pub data: Arc<SessionData>,
}

impl SessionRecord {
    pub fn is_ready(&self) -> bool {
        self.status == SessionStatus::Ready
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Readiness {
    pub status: SessionStatus,
    pub window: Option<Span>,
}

/// Readiness gate: all four gating modalities available and overlapping.
///
/// `available` holds the modalities whose assets were found and parsed.
pub fn readiness(available: &BTreeSet<ModalityKind>, manifest: &SyncManifest) -> Readiness {
    let complete = ModalityKind::GATING
        .iter()
        .all(|k| available.contains(k) && manifest.contains(*k));
    if !complete {
        return Readiness {
            status: SessionStatus::Incomplete,
            window: None,
        };
    }
    match manifest.gating_window() {
        Some(window) => Readiness {
            status: SessionStatus::Ready,
            window: Some(window),
        },
        None => Readiness {
            status: SessionStatus::Unaligned,
            window: None,
        },
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogQuery {
    pub skill: Option<Skill>,
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,
    pub performer_substring: Option<String>,
}

impl CatalogQuery {
    pub fn validate(&self) -> Result<(), CatalogError> {
        match (self.date_from, self.date_to) {
            (Some(from), Some(to)) if from > to => Err(CatalogError::InvalidQuery(format!(
                "date_from {from} is after date_to {to}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn matches(&self, record: &SessionRecord) -> bool {
        if let Some(skill) = self.skill {
            if record.skill != Some(skill) {
                return false;
            }
        }
        if self.date_from.is_some() || self.date_to.is_some() {
            let Some(date) = record.recorded_date else {
                return false;
            };
            if self.date_from.is_some_and(|from| date < from) || self.date_to.is_some_and(|to| date > to) {
                return false;
            }
        }
        if let Some(needle) = &self.performer_substring {
            if !record.performer_name.to_lowercase().contains(&needle.to_lowercase()) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StatusSummary {
    pub total: usize,
    pub ready: usize,
    pub unaligned: usize,
    pub incomplete: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogIndex {
    records: Vec<SessionRecord>,
    scanned_at: DateTime<Utc>,
    #[serde(skip)]
    by_id: HashMap<String, usize>,
}

impl CatalogIndex {
    /// Builds an index, sorting records by date (newest first) then id.
    pub fn new(mut records: Vec<SessionRecord>, scanned_at: DateTime<Utc>) -> Self {
        use std::cmp::Ordering;
        records.sort_by(|a, b| {
            let by_date = match (a.recorded_date, b.recorded_date) {
                (Some(x), Some(y)) => y.cmp(&x),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            };
            by_date.then_with(|| a.id.cmp(&b.id))
        });
        // ids are directory names, hence unique
        let by_id = records.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();
        CatalogIndex {
            records,
            scanned_at,
            by_id,
        }
    }

    pub fn empty() -> Self {
        CatalogIndex::new(Vec::new(), Utc::now())
    }

    pub fn records(&self) -> &[SessionRecord] {
        &self.records
    }

    pub fn scanned_at(&self) -> DateTime<Utc> {
        self.scanned_at
    }

    pub fn get(&self, id: &str) -> Option<&SessionRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn summary(&self) -> StatusSummary {
        let mut s = StatusSummary {
            total: self.records.len(),
            ..Default::default()
        };
        for r in &self.records {
            match r.status {
                SessionStatus::Ready => s.ready += 1,
                SessionStatus::Unaligned => s.unaligned += 1,
                SessionStatus::Incomplete => s.incomplete += 1,
            }
        }
        s
    }
}

/// Records matching every predicate of `q`, in index order.
pub fn filter_sessions<'a>(
    index: &'a CatalogIndex,
    q: &CatalogQuery,
    ready_only: bool,
) -> Result<Vec<&'a SessionRecord>, CatalogError> {
    q.validate()?;
    Ok(index
        .records()
        .iter()
        .filter(|r| !ready_only || r.is_ready())
        .filter(|r| q.matches(r))
        .collect())
}

/// Scans `root/sessions/` and builds a fresh index.
///
/// Problems inside one session only degrade that session's status.
pub fn scan_dataset(root: &Path) -> Result<CatalogIndex, CatalogError> {
    let sessions = root.join("sessions");
    let unreadable = |source| CatalogError::UnreadableRoot {
        path: root.to_path_buf(),
        source,
    };
    let mut dirs = Vec::new();
    for entry in fs::read_dir(&sessions).map_err(unreadable)? {
        let entry = entry.map_err(unreadable)?;
        if entry.file_type().map_err(unreadable)?.is_dir() {
            let path = entry.path();
            if path.join(SESSION_FILE).is_file() {
                dirs.push(path);
            } else {
                tracing::debug!(dir = %path.display(), "skipping directory without session.json");
            }
        }
    }
    let records: Vec<SessionRecord> = dirs.par_iter().map(|dir| load_session(dir)).collect();
    Ok(CatalogIndex::new(records, Utc::now()))
}

/// Loads one session directory into a record. Never fails: problems are
/// reported as warnings and reflected in the status.
pub fn load_session(dir: &Path) -> SessionRecord {
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut loader = SessionLoader {
        dir,
        warnings: Vec::new(),
    };
    loader.load(id)
}

#[derive(Deserialize, Default)]
struct SessionFile {
    id: Option<String>,
    performer: Option<PerformerEntry>,
    recorded_date: Option<String>,
    piece: Option<String>,
    #[serde(default)]
    modalities: BTreeMap<String, serde_json::Value>,
    score: Option<ScoreEntry>,
    thumbnail: Option<String>,
}

#[derive(Deserialize)]
struct PerformerEntry {
    name: Option<String>,
    skill: Option<String>,
}

#[derive(Deserialize)]
struct ScoreEntry {
    #[serde(default)]
    pages: Vec<String>,
    measure_map: Option<String>,
}

#[derive(Deserialize)]
struct ModalityEntry {
    file: String,
    #[serde(default)]
    offset_s: f64,
    #[serde(default = "one")]
    scale: f64,
    local_start_s: f64,
    local_end_s: f64,
    rate_hz: Option<f64>,
    fps: Option<f64>,
    skeleton: Option<String>,
}

fn one() -> f64 {
    1.0
}

struct SessionLoader<'a> {
    dir: &'a Path,
    warnings: Vec<String>,
}

impl SessionLoader<'_> {
    fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    fn read(&mut self, rel: &str) -> Option<Vec<u8>> {
        match fs::read(self.dir.join(rel)) {
            Ok(bytes) => Some(bytes),
            Err(e) => {
                self.warn(format!("cannot read {rel}: {e}"));
                None
            }
        }
    }

    fn read_text(&mut self, rel: &str) -> Option<String> {
        let bytes = self.read(rel)?;
        match String::from_utf8(bytes) {
            Ok(s) => Some(s),
            Err(_) => {
                self.warn(format!("{rel} is not valid UTF-8"));
                None
            }
        }
    }

    fn load(&mut self, id: String) -> SessionRecord {
        let file: SessionFile = match self
            .read_text(SESSION_FILE)
            .map(|text| serde_json::from_str::<SessionFile>(&text))
        {
            Some(Ok(f)) => f,
            Some(Err(e)) => {
                self.warn(format!("malformed {SESSION_FILE}: {e}"));
                SessionFile::default()
            }
            None => SessionFile::default(),
        };

        if let Some(declared) = &file.id {
            if *declared != id {
                self.warn(format!("session.json id {declared:?} differs from directory name {id:?}"));
            }
        }
        let (performer_name, skill) = match &file.performer {
            Some(p) => {
                let skill = match p.skill.as_deref().map(Skill::from_str) {
                    Some(Ok(s)) => Some(s),
                    Some(Err(e)) => {
                        self.warn(format!("performer: {e}"));
                        None
                    }
                    None => {
                        self.warn("performer skill missing");
                        None
                    }
                };
                (p.name.clone().unwrap_or_default(), skill)
            }
            None => {
                self.warn("performer missing");
                (String::new(), None)
            }
        };
        let recorded_date = match file.recorded_date.as_deref() {
            Some(s) => match NaiveDate::parse_from_str(s, "%Y-%m-%d") {
                Ok(d) => Some(d),
                Err(e) => {
                    self.warn(format!("recorded_date {s:?}: {e}"));
                    None
                }
            },
            None => {
                self.warn("recorded_date missing");
                None
            }
        };

        let mut assets = SessionAssets {
            dir: self.dir.to_path_buf(),
            thumbnail: file.thumbnail.clone(),
            ..Default::default()
        };
        if let Some(thumb) = &file.thumbnail {
            if !self.dir.join(thumb).is_file() {
                self.warn(format!("thumbnail {thumb} not found"));
            }
        }

        let mut data = SessionData::default();
        let mut tracks = Vec::new();
        let mut available = BTreeSet::new();
        for (key, value) in &file.modalities {
            let Ok(kind) = serde_json::from_value::<ModalityKind>(serde_json::Value::String(key.clone())) else {
                self.warn(format!("unknown modality {key:?} ignored"));
                continue;
            };
            let entry: ModalityEntry = match serde_json::from_value(value.clone()) {
                Ok(e) => e,
                Err(e) => {
                    self.warn(format!("modality {kind}: {e}"));
                    continue;
                }
            };
            assets.files.insert(kind, entry.file.clone());
            match ClockMap::new(entry.offset_s, entry.scale)
                .and_then(|clock| ModalityTrack::new(kind, clock, Span::new(entry.local_start_s, entry.local_end_s)))
            {
                Ok(track) => tracks.push(track),
                Err(e) => {
                    self.warn(format!("modality {kind}: {e}"));
                    continue;
                }
            }
            if self.load_modality(kind, &entry, &mut data, &mut assets) {
                available.insert(kind);
            }
        }
        for kind in ModalityKind::GATING {
            if !file.modalities.contains_key(kind.as_str()) {
                self.warn(format!("missing modality {kind}"));
            }
        }

        if let Some(score) = &file.score {
            assets.score_pages = score.pages.clone();
            for page in &score.pages {
                if !self.dir.join(page).is_file() {
                    self.warn(format!("score page {page} not found"));
                }
            }
            if let Some(rel) = &score.measure_map {
                assets.measure_map = Some(rel.clone());
                if let Some(text) = self.read_text(rel) {
                    match serde_json::from_str::<Vec<Measure>>(&text) {
                        Ok(m) => data.measures = m,
                        Err(e) => self.warn(format!("{rel}: {e}")),
                    }
                }
            }
        }

        let manifest = match SyncManifest::new(tracks) {
            Ok(m) => m,
            Err(e) => {
                // unreachable in practice: keys of a map are unique
                self.warn(format!("manifest: {e}"));
                SyncManifest::default()
            }
        };
        let Readiness { status, window } = readiness(&available, &manifest);
        if status == SessionStatus::Unaligned {
            self.warn("gating modalities do not overlap on the master timeline");
        }

        SessionRecord {
            id,
            performer_name,
            skill,
            recorded_date,
            piece: file.piece.clone().unwrap_or_default(),
            manifest,
            assets,
            status,
            warnings: std::mem::take(&mut self.warnings),
            window,
            duration_s: window.map(|w| w.duration()),
            data: Arc::new(data),
        }
    }

    /// Validates and parses one modality's asset; true when usable.
    fn load_modality(
        &mut self,
        kind: ModalityKind,
        entry: &ModalityEntry,
        data: &mut SessionData,
        assets: &mut SessionAssets,
    ) -> bool {
        let declared_len = entry.local_end_s - entry.local_start_s;
        match kind {
            ModalityKind::Midi => {
                let Some(bytes) = self.read(&entry.file) else {
                    return false;
                };
                let file = match midi::parse_smf(&bytes) {
                    Ok(f) => f,
                    Err(e) => {
                        self.warn(format!("{}: {e}", entry.file));
                        return false;
                    }
                };
                let extraction = midi::extract_notes(&file);
                for w in &extraction.warnings {
                    self.warn(w.to_string());
                }
                data.midi = Some(MidiData {
                    notes: extraction.notes,
                    warnings: extraction.warnings,
                });
                true
            }
            ModalityKind::Motion => {
                let Some(rate) = entry.rate_hz.filter(|r| r.is_finite() && *r > 0.0) else {
                    self.warn("modality motion: rate_hz missing or not positive");
                    return false;
                };
                let skeleton_rel = entry.skeleton.clone().unwrap_or_else(|| DEFAULT_SKELETON_FILE.to_string());
                assets.skeleton = Some(skeleton_rel.clone());
                let Some(skeleton_text) = self.read_text(&skeleton_rel) else {
                    return false;
                };
                let skeleton = match Skeleton::from_json(&skeleton_text) {
                    Ok(s) => s,
                    Err(e) => {
                        self.warn(format!("{skeleton_rel}: {e}"));
                        return false;
                    }
                };
                let Some(text) = self.read_text(&entry.file) else {
                    return false;
                };
                let clip = match motion::parse_motion_csv(&text, &skeleton, rate) {
                    Ok(c) => c,
                    Err(e) => {
                        self.warn(format!("{}: {e}", entry.file));
                        return false;
                    }
                };
                if entry.local_end_s > clip.duration_s() + 1.0 / rate {
                    self.warn(format!(
                        "motion span ends at {} s but clip lasts {:.3} s",
                        entry.local_end_s,
                        clip.duration_s()
                    ));
                }
                data.motion = Some(MotionData { clip, skeleton });
                true
            }
            ModalityKind::Video | ModalityKind::Audio | ModalityKind::Score => {
                if kind == ModalityKind::Video {
                    data.video_fps = entry.fps;
                }
                if !self.dir.join(&entry.file).is_file() {
                    self.warn(format!("{kind} file {} not found", entry.file));
                    return false;
                }
                if declared_len <= 0.0 {
                    self.warn(format!("{kind} span is empty"));
                }
                true
            }
        }
    }
}

/// Holder for the current index; rescans publish a new index atomically.
#[derive(Debug)]
pub struct SharedCatalog {
    root: PathBuf,
    current: RwLock<Arc<CatalogIndex>>,
}

impl SharedCatalog {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, CatalogError> {
        let root = root.into();
        let index = scan_dataset(&root)?;
        Ok(SharedCatalog {
            root,
            current: RwLock::new(Arc::new(index)),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn snapshot(&self) -> Arc<CatalogIndex> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Rebuilds the index off to the side and swaps it in.
    pub fn rescan(&self) -> Result<Arc<CatalogIndex>, CatalogError> {
        let fresh = Arc::new(scan_dataset(&self.root)?);
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = fresh.clone();
        Ok(fresh)
    }
}
