//! Synthetic dataset directories in the on-disk session layout.

use std::fs;
use std::io;
use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use crate::motion::{motion_csv, skeleton_json, synthetic_frames, PIANIST_JOINTS};
use crate::oracle::stepwise_tick_seconds;
use crate::smf::{self, SmfParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ready,
    /// Video clock shifted far away from the other modalities.
    Unaligned,
    MissingMotion,
    MissingMidi,
    CorruptMidi,
    MalformedSessionJson,
}

impl Outcome {
    /// Status name the catalog should report.
    pub fn expected_status(self) -> &'static str {
        match self {
            Outcome::Ready => "ready",
            Outcome::Unaligned => "unaligned",
            _ => "incomplete",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionPlan {
    pub id: String,
    pub performer: String,
    pub skill: &'static str,
    pub date: String,
    pub piece: String,
    pub outcome: Outcome,
    pub duration_s: f64,
    pub notes: usize,
    pub motion_rate_hz: f64,
    pub seed: u64,
}

/// `(offset_s, scale, local_start_s, local_end_s)`
pub type ClockSpec = (f64, f64, f64, f64);

#[derive(Debug, Clone)]
pub struct GeneratedSession {
    pub plan: SessionPlan,
    pub audio: ClockSpec,
    pub midi: ClockSpec,
    pub video: ClockSpec,
    pub motion: ClockSpec,
    /// `(onset, offset, pitch)` on the master timeline, from the tempo oracle.
    pub notes_master: Vec<(f64, f64, u8)>,
}

impl GeneratedSession {
    pub fn master_span(c: ClockSpec) -> (f64, f64) {
        (c.0 + c.1 * c.2, c.0 + c.1 * c.3)
    }

    pub fn gating_spans(&self) -> [(f64, f64); 4] {
        [self.audio, self.midi, self.video, self.motion].map(Self::master_span)
    }
}

const PERFORMERS: &[&str] = &[
    "Kim Minji",
    "Park Jisoo",
    "Lee Hyun",
    "Choi Yuna",
    "Hakim Farouk",
    "Jung Seoyeon",
    "Anna Kimura",
    "David Park",
];
const PIECES: &[&str] = &[
    "Chopin Etude Op.10 No.1",
    "Bach Invention No.8",
    "Mozart Sonata K.545 I",
    "Debussy Clair de lune",
    "Czerny Op.299 No.1",
];

fn placeholder(len: usize, seed: u64) -> Vec<u8> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..len).map(|_| rng.random()).collect()
}

/// Writes one session directory under `root/sessions/`.
pub fn write_session(root: &Path, plan: &SessionPlan) -> io::Result<GeneratedSession> {
    let dir = root.join("sessions").join(&plan.id);
    fs::create_dir_all(dir.join("score"))?;
    let mut rng = StdRng::seed_from_u64(plan.seed);
    let d = plan.duration_s;

    let audio = (0.0, 1.0, 0.0, d);
    let midi = (rng.random_range(-0.3..0.3), 1.0, 0.0, d);
    let video_offset = if plan.outcome == Outcome::Unaligned { 1000.0 } else { rng.random_range(-0.2..0.2) };
    let video = (video_offset, 1.0, 0.0, d);
    let motion_frames = (d * plan.motion_rate_hz).floor() as usize + 1;
    let motion_len = (motion_frames - 1) as f64 / plan.motion_rate_hz;
    let motion = (rng.random_range(-0.3..0.3), rng.random_range(0.999..1.001), 0.0, motion_len);

    // MIDI: generate, then keep the file as written
    let params = SmfParams {
        format: rng.random_range(0..=1),
        notes: plan.notes,
        tempo_changes: rng.random_range(1..=4),
        division: 480,
        tracks: 2,
    };
    let song = smf::generate(&mut rng, params);
    let max_tick = song.ledger.iter().map(|n| n.off_tick).max().unwrap_or(0);
    let secs = stepwise_tick_seconds(&song.tempos, song.division, max_tick);
    let notes_master = song
        .ledger
        .iter()
        .map(|n| {
            let to_master = |local: f64| midi.0 + midi.1 * local;
            (to_master(secs[n.on_tick as usize]), to_master(secs[n.off_tick as usize]), n.pitch)
        })
        .collect();

    if plan.outcome != Outcome::MissingMidi {
        let bytes = if plan.outcome == Outcome::CorruptMidi {
            let mut b = song.bytes.clone();
            b[0..4].copy_from_slice(b"MThe");
            b
        } else {
            song.bytes.clone()
        };
        fs::write(dir.join("performance.mid"), bytes)?;
    }
    if plan.outcome != Outcome::MissingMotion {
        let names: Vec<&str> = PIANIST_JOINTS.iter().map(|j| j.0).collect();
        let frames = synthetic_frames(names.len(), motion_frames, plan.motion_rate_hz, plan.seed as f64 * 0.1);
        fs::write(dir.join("motion.csv"), motion_csv(&names, &frames))?;
    }
    fs::write(dir.join("skeleton.json"), skeleton_json("pianist", PIANIST_JOINTS))?;
    fs::write(dir.join("video.mp4"), placeholder(4096, plan.seed))?;
    fs::write(dir.join("audio.wav"), placeholder(2048, plan.seed + 1))?;
    fs::write(dir.join("thumbnail.jpg"), placeholder(512, plan.seed + 2))?;
    fs::write(dir.join("score/page1.png"), placeholder(256, plan.seed + 3))?;

    let measures: Vec<Value> = (0..(d / 2.0).ceil() as u32)
        .map(|m| json!({"measure": m + 1, "start_master_s": m as f64 * 2.0, "end_master_s": (m + 1) as f64 * 2.0, "page": 1}))
        .collect();
    fs::write(dir.join("score/measure_map.json"), serde_json::to_string(&measures)?)?;

    let clock = |file: &str, c: ClockSpec| {
        json!({"file": file, "offset_s": c.0, "scale": c.1, "local_start_s": c.2, "local_end_s": c.3})
    };
    let mut motion_entry = clock("motion.csv", motion);
    motion_entry["rate_hz"] = json!(plan.motion_rate_hz);
    let mut video_entry = clock("video.mp4", video);
    video_entry["fps"] = json!(30.0);
    let session = json!({
        "id": plan.id,
        "performer": {"name": plan.performer, "skill": plan.skill},
        "recorded_date": plan.date,
        "piece": plan.piece,
        "thumbnail": "thumbnail.jpg",
        "modalities": {
            "audio": clock("audio.wav", audio),
            "midi": clock("performance.mid", midi),
            "video": video_entry,
            "motion": motion_entry,
        },
        "score": {"pages": ["score/page1.png"], "measure_map": "score/measure_map.json"},
    });
    let text = if plan.outcome == Outcome::MalformedSessionJson {
        let s = serde_json::to_string_pretty(&session)?;
        s[..s.len() / 2].to_string()
    } else {
        serde_json::to_string_pretty(&session)?
    };
    fs::write(dir.join("session.json"), text)?;

    Ok(GeneratedSession {
        plan: plan.clone(),
        audio,
        midi,
        video,
        motion,
        notes_master,
    })
}

/// Plan for session number `i` of a mixed dataset: mostly ready, with a
/// share of unaligned and several kinds of incomplete sessions.
pub fn mixed_plan(i: usize, seed: u64) -> SessionPlan {
    let mut rng = StdRng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let outcome = match i % 12 {
        3 => Outcome::Unaligned,
        7 => Outcome::MissingMotion,
        9 => Outcome::CorruptMidi,
        10 if i % 24 == 10 => Outcome::MalformedSessionJson,
        10 => Outcome::MissingMidi,
        _ => Outcome::Ready,
    };
    SessionPlan {
        id: format!("session-{i:03}"),
        performer: PERFORMERS[rng.random_range(0..PERFORMERS.len())].to_string(),
        skill: if rng.random_bool(0.5) { "professional" } else { "amateur" },
        date: format!(
            "{}-{:02}-{:02}",
            rng.random_range(2023..=2024),
            rng.random_range(1..=12),
            rng.random_range(1..=28)
        ),
        piece: PIECES[rng.random_range(0..PIECES.len())].to_string(),
        outcome,
        duration_s: rng.random_range(8.0..16.0),
        notes: rng.random_range(10..60),
        motion_rate_hz: 30.0,
        seed: seed.wrapping_add(i as u64),
    }
}

/// Writes `n` mixed sessions under `root`.
pub fn generate_dataset(root: &Path, n: usize, seed: u64) -> io::Result<Vec<GeneratedSession>> {
    fs::create_dir_all(root.join("sessions"))?;
    (0..n).map(|i| write_session(root, &mixed_plan(i, seed))).collect()
}
