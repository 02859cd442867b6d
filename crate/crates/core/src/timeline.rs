//! Master timeline and per-modality clock mapping.
//!
//! Every modality of a recording carries its own local clock. A [`ClockMap`]
//! relates that clock to the shared master timeline with a linear model
//! `master = offset_s + scale * local`. A [`SyncManifest`] collects one
//! [`ModalityTrack`] per modality and answers the alignment question used by
//! the readiness gate: over which master interval do all required modalities
//! have data?

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used for timeline equality comparisons, in seconds.
pub const TIME_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimelineError {
    #[error("invalid clock map: offset {offset_s}, scale {scale} (scale must be finite and > 0)")]
    InvalidClock { offset_s: f64, scale: f64 },
    #[error("invalid span [{start_s}, {end_s}] for {kind}: bounds must be finite, >= 0 and ordered")]
    InvalidSpan {
        kind: ModalityKind,
        start_s: f64,
        end_s: f64,
    },
    #[error("duplicate track for modality {0}")]
    DuplicateModality(ModalityKind),
    #[error("overlap query requires at least one modality")]
    EmptyRequirement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModalityKind {
    Audio,
    Midi,
    Video,
    Motion,
    Score,
}

impl ModalityKind {
    pub const ALL: [ModalityKind; 5] = [
        ModalityKind::Audio,
        ModalityKind::Midi,
        ModalityKind::Video,
        ModalityKind::Motion,
        ModalityKind::Score,
    ];

    /// The four modalities that must be present and overlapping before a
    /// session may be explored. Score is optional.
    pub const GATING: [ModalityKind; 4] = [
        ModalityKind::Audio,
        ModalityKind::Midi,
        ModalityKind::Video,
        ModalityKind::Motion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModalityKind::Audio => "audio",
            ModalityKind::Midi => "midi",
            ModalityKind::Video => "video",
            ModalityKind::Motion => "motion",
            ModalityKind::Score => "score",
        }
    }

    pub fn is_gating(self) -> bool {
        self != ModalityKind::Score
    }
}

impl fmt::Display for ModalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Linear map from a modality's local clock onto the master timeline.
///
/// Construction validates the parameters, so a `ClockMap` in hand is always
/// strictly increasing and invertible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClockMap", into = "RawClockMap")]
pub struct ClockMap {
    offset_s: f64,
    scale: f64,
}

#[derive(Serialize, Deserialize)]
struct RawClockMap {
    offset_s: f64,
    scale: f64,
}

impl TryFrom<RawClockMap> for ClockMap {
    type Error = TimelineError;

    fn try_from(raw: RawClockMap) -> Result<Self, Self::Error> {
        ClockMap::new(raw.offset_s, raw.scale)
    }
}

impl From<ClockMap> for RawClockMap {
    fn from(c: ClockMap) -> Self {
        RawClockMap {
            offset_s: c.offset_s,
            scale: c.scale,
        }
    }
}

impl ClockMap {
    pub const IDENTITY: ClockMap = ClockMap {
        offset_s: 0.0,
        scale: 1.0,
    };

    pub fn new(offset_s: f64, scale: f64) -> Result<Self, TimelineError> {
        if !offset_s.is_finite() || !scale.is_finite() || scale <= 0.0 {
            return Err(TimelineError::InvalidClock { offset_s, scale });
        }
        Ok(ClockMap { offset_s, scale })
    }

    pub fn offset_s(&self) -> f64 {
        self.offset_s
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn to_master(&self, local_t: f64) -> f64 {
        self.offset_s + self.scale * local_t
    }

    pub fn to_local(&self, master_t: f64) -> f64 {
        (master_t - self.offset_s) / self.scale
    }

    pub fn span_to_master(&self, span: Span) -> Span {
        Span {
            start_s: self.to_master(span.start_s),
            end_s: self.to_master(span.end_s),
        }
    }

    pub fn span_to_local(&self, span: Span) -> Span {
        Span {
            start_s: self.to_local(span.start_s),
            end_s: self.to_local(span.end_s),
        }
    }
}

impl Default for ClockMap {
    fn default() -> Self {
        ClockMap::IDENTITY
    }
}

/// Closed time interval `[start_s, end_s]` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start_s: f64,
    pub end_s: f64,
}

impl Span {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        Span { start_s, end_s }
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_s && t <= self.end_s
    }

    /// True when `other` lies inside `self` (within [`TIME_EPSILON`]).
    pub fn encloses(&self, other: &Span) -> bool {
        other.start_s >= self.start_s - TIME_EPSILON && other.end_s <= self.end_s + TIME_EPSILON
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalityTrack {
    pub kind: ModalityKind,
    pub clock: ClockMap,
    pub local_span: Span,
}

impl ModalityTrack {
    pub fn new(kind: ModalityKind, clock: ClockMap, local_span: Span) -> Result<Self, TimelineError> {
        let Span { start_s, end_s } = local_span;
        let ok = start_s.is_finite() && end_s.is_finite() && start_s >= 0.0 && start_s <= end_s;
        if !ok {
            return Err(TimelineError::InvalidSpan { kind, start_s, end_s });
        }
        Ok(ModalityTrack {
            kind,
            clock,
            local_span,
        })
    }

    pub fn master_span(&self) -> Span {
        self.clock.span_to_master(self.local_span)
    }
}

/// Per-session collection of clock maps, at most one track per modality.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SyncManifest {
    tracks: BTreeMap<ModalityKind, ModalityTrack>,
}

impl SyncManifest {
    pub fn new(tracks: impl IntoIterator<Item = ModalityTrack>) -> Result<Self, TimelineError> {
        let mut map = BTreeMap::new();
        for track in tracks {
            // re-validate: fields are public
            let track = ModalityTrack::new(track.kind, track.clock, track.local_span)?;
            if map.insert(track.kind, track).is_some() {
                return Err(TimelineError::DuplicateModality(track.kind));
            }
        }
        Ok(SyncManifest { tracks: map })
    }

    pub fn track(&self, kind: ModalityKind) -> Option<&ModalityTrack> {
        self.tracks.get(&kind)
    }

    pub fn clock(&self, kind: ModalityKind) -> Option<ClockMap> {
        self.tracks.get(&kind).map(|t| t.clock)
    }

    pub fn tracks(&self) -> impl Iterator<Item = &ModalityTrack> {
        self.tracks.values()
    }

    pub fn contains(&self, kind: ModalityKind) -> bool {
        self.tracks.contains_key(&kind)
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Intersection of the master spans of every `required` track.
    ///
    /// Returns `Ok(None)` when a required track is missing or when the
    /// intersection is empty. A zero-length intersection counts as empty.
    pub fn overlap_window(&self, required: &[ModalityKind]) -> Result<Option<Span>, TimelineError> {
        if required.is_empty() {
            return Err(TimelineError::EmptyRequirement);
        }
        let mut start = f64::NEG_INFINITY;
        let mut end = f64::INFINITY;
        for kind in required {
            let Some(track) = self.tracks.get(kind) else {
                return Ok(None);
            };
            let span = track.master_span();
            start = start.max(span.start_s);
            end = end.min(span.end_s);
        }
        if end > start {
            Ok(Some(Span::new(start, end)))
        } else {
            Ok(None)
        }
    }

    /// Overlap over the four gating modalities.
    pub fn gating_window(&self) -> Option<Span> {
        self.overlap_window(&ModalityKind::GATING)
            .expect("gating set is non-empty")
    }
}

impl<'de> Deserialize<'de> for SyncManifest {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            tracks: BTreeMap<ModalityKind, ModalityTrack>,
        }
        let raw = Raw::deserialize(deserializer)?;
        SyncManifest::new(raw.tracks.into_values()).map_err(serde::de::Error::custom)
    }
}
