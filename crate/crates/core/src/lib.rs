//! Core data model and algorithms for a multimodal piano performance viewer.
//!
//! - [`timeline`]: master timeline, clock maps and modality overlap
//! - [`midi`]: Standard MIDI File parsing, tempo maps, note extraction
//! - [`motion`]: skeletons, motion clips, interpolation and plot series
//! - [`catalog`]: dataset scanning, readiness gate, filtering
//! - [`playback`]: shared transport state machine and frame bundles

pub mod catalog;
pub mod midi;
pub mod motion;
pub mod playback;
pub mod timeline;

pub use catalog::{
    filter_sessions, readiness, scan_dataset, CatalogIndex, CatalogQuery, SessionRecord, SessionStatus, SharedCatalog,
    Skill,
};
pub use midi::{extract_notes, parse_smf, MidiFile, NoteEvent, TempoMap};
pub use motion::{parse_motion_csv, Axis, MotionClip, Region, SeriesPoint, Skeleton};
pub use playback::{create_playback, frame_bundle, FrameBundle, PlaybackState, Side, TransportCommand};
pub use timeline::{ClockMap, ModalityKind, ModalityTrack, Span, SyncManifest};
