//! Playback transport.
//!
//! A [`PlaybackState`] is the shared transport for one or two sessions: a
//! position on the playback axis, a rate, a play flag, an optional loop
//! region and, when comparing two sessions, the audible source. The playback
//! axis starts at the beginning of each source's gating overlap window, so in
//! comparison mode both sessions are aligned at their overlap starts.
//!
//! The state machine is pure. The network layer owns one state per playback,
//! serializes commands and timer ticks onto it, and broadcasts snapshots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{measure_at, CatalogIndex, SessionRecord, SessionStatus};
use crate::midi::piano_roll_window;
use crate::motion::Position;
use crate::timeline::ModalityKind;

pub const MIN_RATE: f64 = 0.1;
pub const MAX_RATE: f64 = 2.0;
/// Half-width of the piano-roll window in a frame bundle, seconds.
pub const DEFAULT_ROLL_HALF_WIDTH_S: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlaybackError {
    #[error("session {0:?} not found")]
    NotFound(String),
    #[error("session {id:?} is {status}; only ready sessions can be played")]
    NotReady { id: String, status: SessionStatus },
    #[error("a playback takes one or two sources, got {0}")]
    SourceCount(usize),
    #[error("invalid range [{a}, {b})")]
    InvalidRange { a: f64, b: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::A => 0,
            Side::B => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackSource {
    pub session_id: String,
    /// Master time of the start of the session's gating overlap.
    pub window_start_s: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopRegion {
    pub a: f64,
    pub b: f64,
}

impl LoopRegion {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.a && t < self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TransportCommand {
    Play,
    Pause,
    Seek(f64),
    SetRate(f64),
    SetLoop { a: f64, b: f64 },
    ClearLoop,
    SelectAudio(Side),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackState {
    pub playback_id: String,
    pub sources: Vec<PlaybackSource>,
    pub position_s: f64,
    pub rate: f64,
    pub playing: bool,
    #[serde(rename = "loop")]
    pub loop_region: Option<LoopRegion>,
    pub audible: Option<Side>,
    pub duration_s: f64,
    pub revision: u64,
}

impl PlaybackState {
    /// New paused transport at position 0. Duration is the shortest source.
    pub fn new(playback_id: impl Into<String>, sources: Vec<PlaybackSource>) -> Result<Self, PlaybackError> {
        if sources.is_empty() || sources.len() > 2 {
            return Err(PlaybackError::SourceCount(sources.len()));
        }
        let duration_s = sources.iter().map(|s| s.duration_s).fold(f64::INFINITY, f64::min);
        if !(duration_s.is_finite() && duration_s >= 0.0) {
            return Err(PlaybackError::InvalidArgument(format!("source duration {duration_s}")));
        }
        let audible = (sources.len() == 2).then_some(Side::A);
        Ok(PlaybackState {
            playback_id: playback_id.into(),
            sources,
            position_s: 0.0,
            rate: 1.0,
            playing: false,
            loop_region: None,
            audible,
            duration_s,
            revision: 0,
        })
    }

    pub fn is_comparison(&self) -> bool {
        self.sources.len() == 2
    }

    pub fn source(&self, side: Side) -> Option<&PlaybackSource> {
        self.sources.get(side.index())
    }

    fn at_end(&self) -> bool {
        self.loop_region.is_none() && self.position_s >= self.duration_s
    }

    /// Applies one transport command. Every accepted command bumps the
    /// revision, even when it leaves the state otherwise unchanged.
    pub fn apply(&mut self, command: TransportCommand) -> Result<(), PlaybackError> {
        match command {
            TransportCommand::Play => {
                if self.at_end() {
                    self.position_s = 0.0;
                }
                self.playing = self.duration_s > 0.0;
            }
            TransportCommand::Pause => self.playing = false,
            TransportCommand::Seek(t) => {
                if t.is_nan() {
                    return Err(PlaybackError::InvalidArgument("seek target is NaN".into()));
                }
                let mut t = t.clamp(0.0, self.duration_s);
                if let Some(l) = self.loop_region {
                    if !l.contains(t) {
                        t = l.a;
                    }
                }
                self.position_s = t;
                if self.at_end() {
                    self.playing = false;
                }
            }
            TransportCommand::SetRate(r) => {
                if r.is_nan() {
                    return Err(PlaybackError::InvalidArgument("rate is NaN".into()));
                }
                self.rate = r.clamp(MIN_RATE, MAX_RATE);
            }
            TransportCommand::SetLoop { a, b } => {
                if !a.is_finite() || !b.is_finite() || a >= b {
                    return Err(PlaybackError::InvalidRange { a, b });
                }
                let (a, b) = (a.max(0.0), b.min(self.duration_s));
                if a >= b {
                    return Err(PlaybackError::InvalidRange { a, b });
                }
                let region = LoopRegion { a, b };
                if !region.contains(self.position_s) {
                    self.position_s = a;
                }
                self.loop_region = Some(region);
            }
            TransportCommand::ClearLoop => self.loop_region = None,
            TransportCommand::SelectAudio(side) => {
                if !self.is_comparison() {
                    return Err(PlaybackError::InvalidState(
                        "audio selection needs a comparison playback".into(),
                    ));
                }
                self.audible = Some(side);
            }
        }
        self.revision += 1;
        Ok(())
    }

    /// Moves the playhead by `rate * wall_dt` seconds of wall-clock time.
    ///
    /// Wraps inside an active loop; otherwise stops and pauses at the end.
    /// Negative or non-finite `wall_dt` is ignored.
    pub fn advance(&mut self, wall_dt: f64) {
        if !self.playing || !(wall_dt.is_finite() && wall_dt > 0.0) {
            return;
        }
        let candidate = self.position_s + self.rate * wall_dt;
        match self.loop_region {
            Some(LoopRegion { a, b }) if candidate >= b => {
                let wrapped = a + (candidate - a).rem_euclid(b - a);
                self.position_s = if wrapped < b { wrapped } else { a };
            }
            _ if candidate >= self.duration_s => {
                self.position_s = self.duration_s;
                self.playing = false;
            }
            _ => self.position_s = candidate,
        }
    }
}

/// Creates a transport over one or two Ready sessions of `index`.
pub fn create_playback(
    index: &CatalogIndex,
    playback_id: impl Into<String>,
    session_ids: &[String],
) -> Result<PlaybackState, PlaybackError> {
    if session_ids.is_empty() || session_ids.len() > 2 {
        return Err(PlaybackError::SourceCount(session_ids.len()));
    }
    let sources = session_ids
        .iter()
        .map(|id| {
            let record = index.get(id).ok_or_else(|| PlaybackError::NotFound(id.clone()))?;
            match (record.status, record.window) {
                (SessionStatus::Ready, Some(window)) => Ok(PlaybackSource {
                    session_id: id.clone(),
                    window_start_s: window.start_s,
                    duration_s: window.duration(),
                }),
                (status, _) => Err(PlaybackError::NotReady {
                    id: id.clone(),
                    status,
                }),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    PlaybackState::new(playback_id, sources)
}

/// A piano-roll note placed on the session master timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollNote {
    pub pitch: u8,
    pub velocity: u8,
    pub channel: u8,
    pub onset_s: f64,
    pub offset_s: f64,
}

/// Notes of `record` sounding within master `[t0, t1)`, in master seconds.
pub fn piano_roll_master(record: &SessionRecord, t0: f64, t1: f64) -> Result<Vec<RollNote>, PlaybackError> {
    if t0.is_nan() || t1.is_nan() || t0 >= t1 {
        return Err(PlaybackError::InvalidRange { a: t0, b: t1 });
    }
    let (Some(midi), Some(clock)) = (&record.data.midi, record.manifest.clock(ModalityKind::Midi)) else {
        return Ok(Vec::new());
    };
    let notes = piano_roll_window(&midi.notes, clock.to_local(t0), clock.to_local(t1))
        .map_err(|e| PlaybackError::InvalidArgument(e.to_string()))?;
    Ok(notes
        .into_iter()
        .map(|n| RollNote {
            pitch: n.pitch,
            velocity: n.velocity,
            channel: n.channel,
            onset_s: clock.to_master(n.onset_s),
            offset_s: clock.to_master(n.offset_s),
        })
        .collect())
}

/// Everything a pane needs to render one source at the current position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameBundle {
    pub session_id: String,
    pub position_s: f64,
    /// Session master time corresponding to `position_s`.
    pub master_t: f64,
    pub local_times: BTreeMap<ModalityKind, f64>,
    pub pose: Option<Vec<Position>>,
    pub piano_roll: Vec<RollNote>,
    pub measure: Option<u32>,
}

/// Maps the playhead through `record`'s manifest.
///
/// `record` must be the session behind `side` of `state`.
pub fn frame_bundle(
    state: &PlaybackState,
    side: Side,
    record: &SessionRecord,
    roll_half_width_s: f64,
) -> Result<FrameBundle, PlaybackError> {
    let source = state
        .source(side)
        .ok_or_else(|| PlaybackError::InvalidState(format!("playback has no source {side:?}")))?;
    if source.session_id != record.id {
        return Err(PlaybackError::InvalidArgument(format!(
            "record {:?} is not source {side:?} ({:?})",
            record.id, source.session_id
        )));
    }
    if !(roll_half_width_s > 0.0 && roll_half_width_s.is_finite()) {
        return Err(PlaybackError::InvalidArgument(format!("roll half-width {roll_half_width_s}")));
    }
    let master_t = source.window_start_s + state.position_s;
    let local_times = record
        .manifest
        .tracks()
        .map(|t| (t.kind, t.clock.to_local(master_t)))
        .collect();
    let pose = match (&record.data.motion, record.manifest.clock(ModalityKind::Motion)) {
        (Some(motion), Some(clock)) => Some(
            motion
                .clip
                .pose_at(clock.to_local(master_t))
                .map_err(|e| PlaybackError::InvalidArgument(e.to_string()))?,
        ),
        _ => None,
    };
    let piano_roll = piano_roll_master(record, master_t - roll_half_width_s, master_t + roll_half_width_s)?;
    Ok(FrameBundle {
        session_id: record.id.clone(),
        position_s: state.position_s,
        master_t,
        local_times,
        pose,
        piano_roll,
        measure: measure_at(&record.data.measures, master_t),
    })
}
