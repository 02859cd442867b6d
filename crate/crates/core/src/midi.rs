//! Standard MIDI File ingestion.
//!
//! Parses SMF format 0 and 1 files with tick-per-quarter timing, builds the
//! tempo map, pairs note-on/note-off messages into [`NoteEvent`]s expressed in
//! local MIDI seconds, and answers time-window queries for the piano roll.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tempo assumed when a file carries no set-tempo event at tick 0.
pub const DEFAULT_TEMPO_US: u32 = 500_000;

const MAX_VLQ_BYTES: usize = 4;
const VLQ_LIMIT: u32 = 1 << 28;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MidiError {
    #[error("malformed MIDI file at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("unsupported MIDI file at byte {offset}: {reason}")]
    Unsupported { offset: usize, reason: String },
    #[error("invalid time range [{t0}, {t1}]")]
    InvalidRange { t0: f64, t1: f64 },
}

fn malformed(offset: usize, reason: impl Into<String>) -> MidiError {
    MidiError::Malformed {
        offset,
        reason: reason.into(),
    }
}

/// Decodes a variable-length quantity from the front of `bytes`.
///
/// Returns the value and the number of bytes consumed.
pub fn decode_vlq(bytes: &[u8]) -> Result<(u32, usize), MidiError> {
    let mut value: u32 = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if i == MAX_VLQ_BYTES {
            return Err(malformed(i, "variable-length quantity longer than 4 bytes"));
        }
        value = (value << 7) | u32::from(b & 0x7F);
        if b & 0x80 == 0 {
            return Ok((value, i + 1));
        }
    }
    if bytes.len() >= MAX_VLQ_BYTES {
        Err(malformed(MAX_VLQ_BYTES, "variable-length quantity longer than 4 bytes"))
    } else {
        Err(malformed(bytes.len(), "truncated variable-length quantity"))
    }
}

/// Encodes `value` (< 2^28) as a variable-length quantity.
///
/// # Panics
///
/// Panics if `value` does not fit in 28 bits.
pub fn encode_vlq(value: u32) -> Vec<u8> {
    assert!(value < VLQ_LIMIT, "VLQ value {value} exceeds 28 bits");
    let mut out = vec![(value & 0x7F) as u8];
    let mut rest = value >> 7;
    while rest > 0 {
        out.push(0x80 | (rest & 0x7F) as u8);
        rest >>= 7;
    }
    out.reverse();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmfFormat {
    SingleTrack,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelMessage {
    NoteOff { key: u8, velocity: u8 },
    NoteOn { key: u8, velocity: u8 },
    PolyPressure { key: u8, pressure: u8 },
    Controller { controller: u8, value: u8 },
    ProgramChange { program: u8 },
    ChannelPressure { pressure: u8 },
    PitchBend { value: u16 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetaEvent {
    /// Microseconds per quarter note.
    Tempo(u32),
    EndOfTrack,
    Other { kind: u8, data: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Channel { channel: u8, message: ChannelMessage },
    Meta(MetaEvent),
    SysEx(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackEvent {
    pub delta: u32,
    /// Absolute tick from the start of the track.
    pub tick: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Track {
    pub events: Vec<TrackEvent>,
}

impl Track {
    /// Tick of the end-of-track event, or of the last event when absent.
    pub fn end_tick(&self) -> u64 {
        self.events
            .iter()
            .rev()
            .find(|e| matches!(e.kind, EventKind::Meta(MetaEvent::EndOfTrack)))
            .or(self.events.last())
            .map_or(0, |e| e.tick)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MidiFile {
    pub format: SmfFormat,
    /// Ticks per quarter note.
    pub division: u16,
    pub tracks: Vec<Track>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], MidiError> {
        if self.remaining() < n {
            return Err(malformed(self.pos, format!("truncated {what}")));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self, what: &str) -> Result<u8, MidiError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, MidiError> {
        let b = self.take(2, what)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32, MidiError> {
        let b = self.take(4, what)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self) -> Result<u32, MidiError> {
        let start = self.pos;
        let (value, used) = decode_vlq(&self.bytes[self.pos..]).map_err(|e| match e {
            MidiError::Malformed { offset, reason } => malformed(start + offset, reason),
            other => other,
        })?;
        self.pos += used;
        Ok(value)
    }
}

/// Parses a Standard MIDI File.
pub fn parse_smf(bytes: &[u8]) -> Result<MidiFile, MidiError> {
    let mut cur = Cursor::new(bytes);
    let magic = cur.take(4, "header chunk")?;
    if magic != b"MThd" {
        return Err(malformed(0, format!("bad header magic {:?}", String::from_utf8_lossy(magic))));
    }
    let header_len = cur.u32("header length")? as usize;
    if header_len < 6 {
        return Err(malformed(4, format!("header length {header_len} < 6")));
    }
    let header_start = cur.pos;
    let format = match cur.u16("format")? {
        0 => SmfFormat::SingleTrack,
        1 => SmfFormat::Parallel,
        2 => {
            return Err(MidiError::Unsupported {
                offset: header_start,
                reason: "format 2 (sequential tracks) is not supported".into(),
            })
        }
        f => return Err(malformed(header_start, format!("unknown format {f}"))),
    };
    let ntracks = cur.u16("track count")?;
    let division_offset = cur.pos;
    let division = cur.u16("division")?;
    if division & 0x8000 != 0 {
        return Err(MidiError::Unsupported {
            offset: division_offset,
            reason: "SMPTE time division is not supported".into(),
        });
    }
    if division == 0 {
        return Err(malformed(division_offset, "division must be >= 1"));
    }
    cur.take(header_len - 6, "header chunk")?;

    let mut tracks = Vec::with_capacity(ntracks as usize);
    while tracks.len() < ntracks as usize {
        let chunk_offset = cur.pos;
        let id = cur.take(4, "chunk id")?;
        let len = cur.u32("chunk length")? as usize;
        if cur.remaining() < len {
            return Err(malformed(
                chunk_offset,
                format!("chunk length {len} exceeds remaining {} bytes", cur.remaining()),
            ));
        }
        let body_offset = cur.pos;
        let body = cur.take(len, "chunk body")?;
        if id == b"MTrk" {
            tracks.push(parse_track(body, body_offset)?);
        }
        // unknown chunk types are skipped
    }
    Ok(MidiFile {
        format,
        division,
        tracks,
    })
}

fn data_byte(cur: &mut Cursor<'_>, base: usize) -> Result<u8, MidiError> {
    let at = base + cur.pos;
    let b = cur
        .u8("channel message")
        .map_err(|_| malformed(at, "truncated channel message"))?;
    if b & 0x80 != 0 {
        return Err(malformed(at, format!("expected data byte, found status 0x{b:02X}")));
    }
    Ok(b)
}

fn parse_track(body: &[u8], base: usize) -> Result<Track, MidiError> {
    let mut cur = Cursor::new(body);
    let mut events = Vec::new();
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;
    let relocate = |e: MidiError| match e {
        MidiError::Malformed { offset, reason } => malformed(base + offset, reason),
        other => other,
    };

    while cur.remaining() > 0 {
        let delta = cur.vlq().map_err(relocate)?;
        tick += u64::from(delta);
        let status_pos = cur.pos;
        let first = cur.u8("event").map_err(relocate)?;
        let kind = match first {
            0xFF => {
                let kind = cur.u8("meta type").map_err(relocate)?;
                let len = cur.vlq().map_err(relocate)? as usize;
                let data = cur.take(len, "meta event").map_err(relocate)?;
                match kind {
                    0x51 => {
                        if len != 3 {
                            return Err(malformed(base + status_pos, format!("tempo meta length {len} != 3")));
                        }
                        let us = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                        if us == 0 {
                            return Err(malformed(base + status_pos, "tempo of 0 us/quarter"));
                        }
                        EventKind::Meta(MetaEvent::Tempo(us))
                    }
                    0x2F => EventKind::Meta(MetaEvent::EndOfTrack),
                    _ => EventKind::Meta(MetaEvent::Other {
                        kind,
                        data: data.to_vec(),
                    }),
                }
            }
            0xF0 | 0xF7 => {
                running = None;
                let len = cur.vlq().map_err(relocate)? as usize;
                let data = cur.take(len, "sysex event").map_err(relocate)?;
                EventKind::SysEx(data.to_vec())
            }
            0xF1..=0xFE => {
                return Err(malformed(base + status_pos, format!("unexpected system status 0x{first:02X}")));
            }
            _ => {
                let (status, first_data) = if first & 0x80 != 0 {
                    running = Some(first);
                    (first, None)
                } else {
                    match running {
                        Some(s) => (s, Some(first)),
                        None => {
                            return Err(malformed(
                                base + status_pos,
                                format!("data byte 0x{first:02X} without running status"),
                            ))
                        }
                    }
                };
                let mut first_data = first_data;
                let mut read = |cur: &mut Cursor<'_>| -> Result<u8, MidiError> {
                    match first_data.take() {
                        Some(b) => Ok(b),
                        None => data_byte(cur, base),
                    }
                };
                let channel = status & 0x0F;
                let message = match status & 0xF0 {
                    0x80 => ChannelMessage::NoteOff {
                        key: read(&mut cur)?,
                        velocity: read(&mut cur)?,
                    },
                    0x90 => ChannelMessage::NoteOn {
                        key: read(&mut cur)?,
                        velocity: read(&mut cur)?,
                    },
                    0xA0 => ChannelMessage::PolyPressure {
                        key: read(&mut cur)?,
                        pressure: read(&mut cur)?,
                    },
                    0xB0 => ChannelMessage::Controller {
                        controller: read(&mut cur)?,
                        value: read(&mut cur)?,
                    },
                    0xC0 => ChannelMessage::ProgramChange {
                        program: read(&mut cur)?,
                    },
                    0xD0 => ChannelMessage::ChannelPressure {
                        pressure: read(&mut cur)?,
                    },
                    0xE0 => {
                        let lsb = read(&mut cur)?;
                        let msb = read(&mut cur)?;
                        ChannelMessage::PitchBend {
                            value: u16::from(lsb) | (u16::from(msb) << 7),
                        }
                    }
                    _ => unreachable!("status byte has high bit set"),
                };
                EventKind::Channel { channel, message }
            }
        };
        let end = matches!(kind, EventKind::Meta(MetaEvent::EndOfTrack));
        events.push(TrackEvent { delta, tick, kind });
        if end {
            break;
        }
    }
    Ok(Track { events })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TempoChange {
    pub tick: u64,
    pub us_per_quarter: u32,
}

/// Ordered set-tempo changes. Always starts with an entry at tick 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TempoMap {
    changes: Vec<TempoChange>,
    /// Sum of `delta_ticks * us_per_quarter` up to each change; exact.
    accumulated: Vec<u128>,
}

impl TempoMap {
    /// Builds a map from `(tick, us_per_quarter)` pairs in the order they were
    /// encountered. Later entries at the same tick replace earlier ones; a
    /// default tempo is inserted at tick 0 if none is given.
    pub fn from_changes(changes: impl IntoIterator<Item = (u64, u32)>) -> Self {
        let mut list: Vec<TempoChange> = changes
            .into_iter()
            .map(|(tick, us)| TempoChange {
                tick,
                us_per_quarter: us.max(1),
            })
            .collect();
        // stable: equal ticks keep encounter order, so the last one wins below
        list.sort_by_key(|c| c.tick);
        let mut deduped: Vec<TempoChange> = Vec::with_capacity(list.len() + 1);
        for c in list {
            match deduped.last_mut() {
                Some(last) if last.tick == c.tick => *last = c,
                _ => deduped.push(c),
            }
        }
        if deduped.first().is_none_or(|c| c.tick != 0) {
            deduped.insert(
                0,
                TempoChange {
                    tick: 0,
                    us_per_quarter: DEFAULT_TEMPO_US,
                },
            );
        }
        let mut accumulated = Vec::with_capacity(deduped.len());
        let mut acc: u128 = 0;
        for (i, c) in deduped.iter().enumerate() {
            if i > 0 {
                let prev = deduped[i - 1];
                acc += u128::from(c.tick - prev.tick) * u128::from(prev.us_per_quarter);
            }
            accumulated.push(acc);
        }
        TempoMap {
            changes: deduped,
            accumulated,
        }
    }

    pub fn changes(&self) -> &[TempoChange] {
        &self.changes
    }

    /// Converts an absolute tick into seconds from the start of the file.
    pub fn ticks_to_seconds(&self, division: u16, tick: u64) -> f64 {
        let idx = self.changes.partition_point(|c| c.tick <= tick) - 1;
        let seg = self.changes[idx];
        let numer = self.accumulated[idx] + u128::from(tick - seg.tick) * u128::from(seg.us_per_quarter);
        numer as f64 / (f64::from(division.max(1)) * 1e6)
    }
}

/// Collects every set-tempo event across all tracks.
pub fn build_tempo_map(file: &MidiFile) -> TempoMap {
    TempoMap::from_changes(file.tracks.iter().flat_map(|t| {
        t.events.iter().filter_map(|e| match e.kind {
            EventKind::Meta(MetaEvent::Tempo(us)) => Some((e.tick, us)),
            _ => None,
        })
    }))
}

/// A sounding note in local MIDI seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteEvent {
    pub pitch: u8,
    pub velocity: u8,
    pub channel: u8,
    pub onset_s: f64,
    pub offset_s: f64,
    pub onset_tick: u64,
    pub offset_tick: u64,
}

impl NoteEvent {
    pub fn overlaps(&self, t0: f64, t1: f64) -> bool {
        self.onset_s < t1 && self.offset_s > t0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WarningKind {
    /// Note-on without matching note-off; closed at end of track.
    UnmatchedNoteOn { channel: u8, pitch: u8 },
    /// Note-on and note-off at the same tick; dropped.
    ZeroLengthNote { channel: u8, pitch: u8 },
    /// Note-off with no sounding note to close.
    OrphanNoteOff { channel: u8, pitch: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub track: usize,
    pub tick: u64,
    #[serde(flatten)]
    pub kind: WarningKind,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (what, channel, pitch) = match self.kind {
            WarningKind::UnmatchedNoteOn { channel, pitch } => ("unmatched note-on closed at end of track", channel, pitch),
            WarningKind::ZeroLengthNote { channel, pitch } => ("zero-length note dropped", channel, pitch),
            WarningKind::OrphanNoteOff { channel, pitch } => ("note-off without note-on", channel, pitch),
        };
        write!(
            f,
            "midi track {} tick {}: {what} (channel {channel}, pitch {pitch})",
            self.track, self.tick
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoteExtraction {
    pub notes: Vec<NoteEvent>,
    pub warnings: Vec<ParseWarning>,
}

struct OpenNote {
    tick: u64,
    velocity: u8,
    track: usize,
}

/// Pairs note-on and note-off messages into note events.
///
/// All tracks share one tick axis. A note-off (or note-on with velocity 0)
/// closes the earliest still-sounding note of the same channel and pitch.
/// Output is sorted by onset, then pitch, then channel.
pub fn extract_notes(file: &MidiFile) -> NoteExtraction {
    let tempo = build_tempo_map(file);
    let to_s = |tick| tempo.ticks_to_seconds(file.division, tick);

    // (tick, track, index) keeps per-track order on equal ticks
    let mut merged: Vec<(u64, usize, usize)> = file
        .tracks
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| t.events.iter().enumerate().map(move |(ei, e)| (e.tick, ti, ei)))
        .collect();
    merged.sort_unstable();

    let mut open: HashMap<(u8, u8), VecDeque<OpenNote>> = HashMap::new();
    let mut out = NoteExtraction::default();
    let close = |out: &mut NoteExtraction, channel: u8, pitch: u8, on: OpenNote, off_tick: u64| {
        if off_tick <= on.tick {
            out.warnings.push(ParseWarning {
                track: on.track,
                tick: on.tick,
                kind: WarningKind::ZeroLengthNote { channel, pitch },
            });
            return;
        }
        out.notes.push(NoteEvent {
            pitch,
            velocity: on.velocity,
            channel,
            onset_s: to_s(on.tick),
            offset_s: to_s(off_tick),
            onset_tick: on.tick,
            offset_tick: off_tick,
        });
    };

    for (tick, ti, ei) in merged {
        let EventKind::Channel { channel, message } = file.tracks[ti].events[ei].kind else {
            continue;
        };
        let (key, on_velocity) = match message {
            ChannelMessage::NoteOn { key, velocity } if velocity > 0 => (key, Some(velocity)),
            ChannelMessage::NoteOn { key, .. } | ChannelMessage::NoteOff { key, .. } => (key, None),
            _ => continue,
        };
        let queue = open.entry((channel, key)).or_default();
        match on_velocity {
            Some(velocity) => queue.push_back(OpenNote {
                tick,
                velocity,
                track: ti,
            }),
            None => match queue.pop_front() {
                Some(on) => close(&mut out, channel, key, on, tick),
                None => out.warnings.push(ParseWarning {
                    track: ti,
                    tick,
                    kind: WarningKind::OrphanNoteOff { channel, pitch: key },
                }),
            },
        }
    }

    let mut leftovers: Vec<((u8, u8), OpenNote)> = open
        .into_iter()
        .flat_map(|(k, q)| q.into_iter().map(move |n| (k, n)))
        .collect();
    leftovers.sort_by_key(|((c, p), n)| (n.tick, *p, *c));
    for ((channel, pitch), on) in leftovers {
        let end = file.tracks[on.track].end_tick();
        out.warnings.push(ParseWarning {
            track: on.track,
            tick: on.tick,
            kind: WarningKind::UnmatchedNoteOn { channel, pitch },
        });
        close(&mut out, channel, pitch, on, end);
    }

    out.notes.sort_by(|a, b| {
        a.onset_tick
            .cmp(&b.onset_tick)
            .then(a.pitch.cmp(&b.pitch))
            .then(a.channel.cmp(&b.channel))
            .then(a.offset_tick.cmp(&b.offset_tick))
    });
    out
}

/// Notes sounding at any time inside `[t0, t1)`, in input order.
///
/// `notes` must be sorted by onset.
pub fn piano_roll_window(notes: &[NoteEvent], t0: f64, t1: f64) -> Result<Vec<NoteEvent>, MidiError> {
    if t0.is_nan() || t1.is_nan() || t0 >= t1 {
        return Err(MidiError::InvalidRange { t0, t1 });
    }
    let end = notes.partition_point(|n| n.onset_s < t1);
    Ok(notes[..end].iter().filter(|n| n.offset_s > t0).copied().collect())
}
