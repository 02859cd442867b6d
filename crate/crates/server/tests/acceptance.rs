//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use chrono::NaiveDate;
use common::*;
use pianoview_core::catalog::{CatalogQuery, SessionStatus, Skill};
use pianoview_core::midi::{build_tempo_map, decode_vlq, encode_vlq, extract_notes, parse_smf};
use pianoview_core::motion::{Axis, MotionClip, Position};
use pianoview_core::playback::{LoopRegion, PlaybackSource, MAX_RATE, MIN_RATE};
use pianoview_core::timeline::{ClockMap, ModalityKind, ModalityTrack, Span, SyncManifest};
use pianoview_core::{filter_sessions, scan_dataset, PlaybackState, TransportCommand};
use pianoview_testkit::dataset::{self, GeneratedSession, Outcome};
use pianoview_testkit::oracle::{interval_intersection, stepwise_tick_seconds};
use pianoview_testkit::smf::{self, write_vlq};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    }};
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

// 1
fn midi_oracle_equivalence() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5EED_0001);
    let files = 120;
    let (mut notes_total, mut max_err, mut formats) = (0usize, 0.0f64, BTreeSet::new());
    let mut elapsed = Duration::ZERO;
    for i in 0..files {
        let mut p = smf::random_params(&mut rng);
        p.format = (i % 2) as u16;
        if p.format == 0 {
            p.tracks = 1;
        }
        if i < 2 {
            p.notes = 500;
            p.tempo_changes = 16;
        }
        ensure!(p.notes <= 500 && p.tempo_changes <= 16, "generator out of bounds: {p:?}");
        let song = smf::generate(&mut rng, p);
        let max_tick = song.ledger.iter().map(|n| n.off_tick).max().unwrap_or(0);
        let oracle = stepwise_tick_seconds(&song.tempos, song.division, max_tick);

        let start = Instant::now();
        let file = parse_smf(&song.bytes).map_err(|e| format!("file {i}: {e}"))?;
        let extraction = extract_notes(&file);
        elapsed += start.elapsed();

        formats.insert(song.format);
        ensure!(extraction.warnings.is_empty(), "file {i}: warnings {:?}", extraction.warnings);
        let tempos: Vec<_> = build_tempo_map(&file).changes().iter().map(|c| (c.tick, c.us_per_quarter)).collect();
        ensure!(tempos == song.tempos, "file {i}: tempo map differs");
        let got: Vec<_> = extraction
            .notes
            .iter()
            .map(|n| (n.onset_tick, n.pitch, n.channel, n.offset_tick, n.velocity))
            .collect();
        let want: Vec<_> = song
            .ledger
            .iter()
            .map(|n| (n.on_tick, n.pitch, n.channel, n.off_tick, n.velocity))
            .collect();
        ensure!(got == want, "file {i}: notes differ from ledger");
        for n in &extraction.notes {
            max_err = max_err
                .max((n.onset_s - oracle[n.onset_tick as usize]).abs())
                .max((n.offset_s - oracle[n.offset_tick as usize]).abs());
        }
        notes_total += got.len();
    }
    ensure!(formats.len() == 2, "formats covered: {formats:?}");
    ensure!(max_err <= 1e-9, "max time error {max_err:e} s");
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "{files} files, {notes_total} notes, max |dt| {max_err:.1e} s, {elapsed:.2?}"
    ))
}

// 2
fn vlq_round_trip() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5EED_0002);
    let randoms: Vec<u32> = (0..10_000).map(|_| rng.random_range(0..1u32 << 28)).collect();
    let start = Instant::now();
    for v in (0..=65_535u32).chain(randoms.iter().copied()) {
        let bytes = encode_vlq(v);
        let (back, used) = decode_vlq(&bytes).map_err(|e| format!("{v}: {e}"))?;
        ensure!(back == v && used == bytes.len(), "{v} decoded as {back} ({used} bytes)");
    }
    let elapsed = start.elapsed();
    // independent writer agrees on the encoding
    for v in (0..=65_535u32).chain(randoms.iter().copied()) {
        let mut independent = Vec::new();
        write_vlq(&mut independent, v);
        ensure!(independent == encode_vlq(v), "{v}: encoding differs from reference writer");
    }
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("75,536 values, {elapsed:.2?}"))
}

// 3
fn timeline_properties() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5EED_0003);
    let mut max_err = 0.0f64;
    for _ in 0..10_000 {
        let offset = rng.random_range(-3600.0..3600.0);
        let scale = rng.random_range(0.5..2.0);
        let clock = ClockMap::new(offset, scale).map_err(|e| e.to_string())?;
        let local = rng.random_range(-7200.0..7200.0);
        let master = rng.random_range(-7200.0..7200.0);
        max_err = max_err
            .max((clock.to_local(clock.to_master(local)) - local).abs())
            .max((clock.to_master(clock.to_local(master)) - master).abs());
    }
    ensure!(max_err <= 1e-9, "round-trip error {max_err:e}");

    let mut empty = 0;
    for m in 0..1_000 {
        let mut kinds = ModalityKind::ALL.to_vec();
        let count = rng.random_range(1..=kinds.len());
        let mut tracks = Vec::new();
        let mut master_spans = Vec::new();
        for _ in 0..count {
            let kind = kinds.swap_remove(rng.random_range(0..kinds.len()));
            // integer clocks sometimes, so touching spans are exact
            let (offset, scale, a, len) = if rng.random_bool(0.3) {
                (
                    rng.random_range(-5..5) as f64,
                    1.0,
                    rng.random_range(0..20) as f64,
                    rng.random_range(0..20) as f64,
                )
            } else {
                (
                    rng.random_range(-30.0..30.0),
                    rng.random_range(0.9..1.1),
                    rng.random_range(0.0..40.0),
                    rng.random_range(0.0..60.0),
                )
            };
            let clock = ClockMap::new(offset, scale).map_err(|e| e.to_string())?;
            tracks.push(ModalityTrack::new(kind, clock, Span::new(a, a + len)).map_err(|e| e.to_string())?);
            master_spans.push((kind, (offset + scale * a, offset + scale * (a + len))));
        }
        let manifest = SyncManifest::new(tracks).map_err(|e| e.to_string())?;
        // mostly present kinds; sometimes one the manifest lacks
        let required: Vec<ModalityKind> = {
            let mut r: Vec<_> = master_spans.iter().map(|(k, _)| *k).filter(|_| rng.random_bool(0.7)).collect();
            if r.is_empty() {
                r.push(master_spans[0].0);
            }
            if !kinds.is_empty() && rng.random_bool(0.1) {
                r.push(kinds[0]);
            }
            r
        };
        let spans: Option<Vec<(f64, f64)>> = required
            .iter()
            .map(|k| master_spans.iter().find(|(kind, _)| kind == k).map(|(_, s)| *s))
            .collect();
        let want = spans.and_then(|s| interval_intersection(&s));
        let got = manifest.overlap_window(&required).map_err(|e| e.to_string())?;
        let same = match (got, want) {
            (None, None) => true,
            (Some(g), Some((a, b))) => (g.start_s - a).abs() <= 1e-9 && (g.end_s - b).abs() <= 1e-9,
            _ => false,
        };
        ensure!(same, "manifest {m}: got {got:?}, oracle {want:?}");
        empty += usize::from(got.is_none());
    }
    Ok(format!(
        "10,000 clocks, max round-trip error {max_err:.1e} s; 1,000 manifests ({empty} empty windows)"
    ))
}

fn clip_from(rate: f64, frames: &[Vec<Position>]) -> Result<MotionClip, String> {
    let joints = frames[0].len();
    let names = (0..joints).map(|j| format!("j{j}")).collect();
    MotionClip::new(rate, "test", names, frames.concat()).map_err(|e| e.to_string())
}

// 4
fn motion_properties() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5EED_0004);
    let mut resample_err = 0.0f64;
    for _ in 0..20 {
        let rate = *[30.0, 60.0, 100.0, 120.0, 240.0].choose(&mut rng).unwrap();
        let frames: Vec<Vec<Position>> = (0..rng.random_range(2..400))
            .map(|_| (0..5).map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0))).collect())
            .collect();
        let clip = clip_from(rate, &frames)?;
        let same = clip.resample(rate).map_err(|e| e.to_string())?;
        ensure!(same.frame_count() == clip.frame_count(), "frame count changed");
        for f in 0..clip.frame_count() {
            for (p, q) in clip.frame(f).iter().zip(same.frame(f)) {
                for i in 0..3 {
                    resample_err = resample_err.max((p[i] - q[i]).abs());
                }
            }
        }
    }
    ensure!(resample_err <= 1e-6, "resample error {resample_err:e} m");

    let mut pose_err = 0.0f64;
    for _ in 0..50 {
        let rate = rng.random_range(20.0..250.0);
        let n = rng.random_range(2..300);
        let p0: Vec<[f64; 3]> = (0..4).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
        let v: Vec<[f64; 3]> = (0..4).map(|_| std::array::from_fn(|_| rng.random_range(-0.5..0.5))).collect();
        let at = |t: f64| -> Vec<Position> {
            p0.iter().zip(&v).map(|(p, v)| std::array::from_fn(|i| p[i] + v[i] * t)).collect()
        };
        let frames: Vec<_> = (0..n).map(|f| at(f as f64 / rate)).collect();
        let clip = clip_from(rate, &frames)?;
        let end = (n - 1) as f64 / rate;
        for _ in 0..100 {
            let t = rng.random_range(0.0..=end);
            let pose = clip.pose_at(t).map_err(|e| e.to_string())?;
            for (p, q) in pose.iter().zip(at(t)) {
                for i in 0..3 {
                    pose_err = pose_err.max((p[i] - q[i]).abs());
                }
            }
        }
    }
    ensure!(pose_err <= 1e-9, "pose_at error {pose_err:e} m");

    let mut windows = 0;
    for _ in 0..50 {
        let rate = 100.0;
        let frames: Vec<Vec<Position>> = (0..1_000)
            .map(|_| vec![std::array::from_fn(|_| rng.random_range(-1.0..1.0))])
            .collect();
        let clip = clip_from(rate, &frames)?;
        let axis = *[Axis::X, Axis::Y, Axis::Z].choose(&mut rng).unwrap();
        let (t0, t1) = if windows == 0 {
            (0.0, 9.99)
        } else {
            let a = rng.random_range(-1.0..9.0);
            (a, a + rng.random_range(1.1..11.0))
        };
        let series = clip.joint_series("j0", axis, t0, t1, 100).map_err(|e| e.to_string())?;
        ensure!(series.len() <= 100, "{} points", series.len());
        let in_window: Vec<f64> = (0..1_000)
            .filter(|&f| {
                let t = f as f64 / rate;
                t >= t0 && t <= t1
            })
            .map(|f| frames[f][0][axis.index()])
            .collect();
        let min = in_window.iter().copied().fold(f64::INFINITY, f64::min);
        let max = in_window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ensure!(series.iter().any(|p| p.v == min), "window [{t0}, {t1}] lost min {min}");
        ensure!(series.iter().any(|p| p.v == max), "window [{t0}, {t1}] lost max {max}");
        windows += 1;
    }
    Ok(format!(
        "resample max error {resample_err:.1e} m, pose_at max error {pose_err:.1e} m, {windows} series windows"
    ))
}

/// Linear-scan query oracle over generator plans. Sessions with unreadable
/// session.json carry no metadata and match no metadata predicate.
fn plan_matches(s: &GeneratedSession, skill: Option<&str>, from: Option<NaiveDate>, to: Option<NaiveDate>, needle: Option<&str>, ready_only: bool) -> bool {
    let p = &s.plan;
    let known = p.outcome != Outcome::MalformedSessionJson;
    let date: NaiveDate = p.date.parse().unwrap();
    (!ready_only || p.outcome == Outcome::Ready)
        && skill.is_none_or(|k| known && p.skill == k)
        && from.is_none_or(|f| known && date >= f)
        && to.is_none_or(|t| known && date <= t)
        && needle.is_none_or(|n| known && p.performer.to_lowercase().contains(&n.to_lowercase()))
}

// 5
fn catalog_at_scale() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sessions = dataset::generate_dataset(dir.path(), 109, 0x5EED_0005).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let index = scan_dataset(dir.path()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(index.len() == 109, "{} records", index.len());
    within(elapsed, Duration::from_secs(2))?;

    for s in &sessions {
        let r = index.get(&s.plan.id).ok_or(format!("{} missing", s.plan.id))?;
        ensure!(r.status.to_string() == s.plan.outcome.expected_status(), "{}: {} vs {:?}", r.id, r.status, s.plan.outcome);
    }
    let summary = index.summary();
    ensure!(summary.ready > 0 && summary.unaligned > 0 && summary.incomplete > 0, "dataset not mixed: {summary:?}");

    // the gate: every Ready record has all four gating modalities loaded
    // and a non-empty overlap equal to the brute-force intersection
    for r in index.records().iter().filter(|r| r.status == SessionStatus::Ready) {
        let generated = sessions.iter().find(|s| s.plan.id == r.id).unwrap();
        for kind in ModalityKind::GATING {
            ensure!(r.manifest.contains(kind), "{}: Ready without {kind:?}", r.id);
            ensure!(r.assets.files.contains_key(&kind), "{}: Ready without {kind:?} asset", r.id);
        }
        ensure!(r.data.midi.is_some() && r.data.motion.is_some(), "{}: Ready without parsed data", r.id);
        let (a, b) = interval_intersection(&generated.gating_spans()).ok_or(format!("{}: Ready without overlap", r.id))?;
        let w = r.window.ok_or(format!("{}: Ready without window", r.id))?;
        ensure!((w.start_s - a).abs() <= 1e-9 && (w.end_s - b).abs() <= 1e-9, "{}: window {w:?} vs ({a}, {b})", r.id);
    }

    let mut rng = StdRng::seed_from_u64(0x5EED_0055);
    let performers: Vec<&str> = sessions.iter().map(|s| s.plan.performer.as_str()).collect();
    for q in 0..200 {
        let skill = match rng.random_range(0..3) {
            0 => None,
            1 => Some("amateur"),
            _ => Some("professional"),
        };
        let mut date = || -> Option<NaiveDate> {
            rng.random_bool(0.5)
                .then(|| NaiveDate::from_ymd_opt(rng.random_range(2023..=2024), rng.random_range(1..=12), rng.random_range(1..=28)).unwrap())
        };
        let (mut from, mut to) = (date(), date());
        if let (Some(f), Some(t)) = (from, to) {
            if f > t {
                (from, to) = (Some(t), Some(f));
            }
        }
        let needle: Option<String> = match rng.random_range(0..4) {
            0 => None,
            1 => Some("zz".into()),
            _ => {
                let name = performers.choose(&mut rng).unwrap();
                let chars: Vec<char> = name.chars().collect();
                let a = rng.random_range(0..chars.len());
                let b = rng.random_range(a + 1..=chars.len());
                let s: String = chars[a..b].iter().collect();
                Some(if rng.random_bool(0.5) { s.to_uppercase() } else { s })
            }
        };
        let ready_only = rng.random_bool(0.5);
        let query = CatalogQuery {
            skill: skill.map(|s| s.parse::<Skill>().unwrap()),
            date_from: from,
            date_to: to,
            performer_substring: needle.clone(),
        };
        let got: BTreeSet<&str> = filter_sessions(&index, &query, ready_only)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|r| r.id.as_str())
            .collect();
        let want: BTreeSet<&str> = sessions
            .iter()
            .filter(|s| plan_matches(s, skill, from, to, needle.as_deref(), ready_only))
            .map(|s| s.plan.id.as_str())
            .collect();
        ensure!(got == want, "query {q} {query:?} ready_only={ready_only}: got {got:?}, want {want:?}");
    }
    Ok(format!(
        "109 records ({} ready, {} unaligned, {} incomplete) in {elapsed:.2?}; 200 queries match",
        summary.ready, summary.unaligned, summary.incomplete
    ))
}

fn random_command(rng: &mut StdRng, duration: f64) -> TransportCommand {
    match rng.random_range(0..8) {
        0 => TransportCommand::Play,
        1 => TransportCommand::Pause,
        2 => TransportCommand::Seek(rng.random_range(-5.0..duration + 5.0)),
        3 => TransportCommand::SetRate(rng.random_range(-1.0..3.0)),
        4 => {
            let a = rng.random_range(-2.0..duration + 2.0);
            TransportCommand::SetLoop {
                a,
                b: a + rng.random_range(-1.0..duration),
            }
        }
        5 => TransportCommand::ClearLoop,
        6 => TransportCommand::SelectAudio(if rng.random_bool(0.5) {
            pianoview_core::Side::A
        } else {
            pianoview_core::Side::B
        }),
        _ => TransportCommand::Seek(duration),
    }
}

fn check_invariants(s: &PlaybackState, duration: f64, comparison: bool) -> Result<(), String> {
    ensure!(s.duration_s == duration, "duration changed");
    ensure!((0.0..=duration).contains(&s.position_s), "position {} outside [0, {duration}]", s.position_s);
    ensure!((MIN_RATE..=MAX_RATE).contains(&s.rate), "rate {}", s.rate);
    ensure!(s.audible.is_some() == comparison, "audible {:?}", s.audible);
    match s.loop_region {
        Some(LoopRegion { a, b }) => {
            ensure!(0.0 <= a && a < b && b <= duration, "loop [{a}, {b})");
            ensure!(a <= s.position_s && s.position_s < b, "position {} outside loop [{a}, {b})", s.position_s);
        }
        None => ensure!(!(s.playing && s.position_s >= duration), "playing at the end"),
    }
    Ok(())
}

// 6
fn transport_state_machine() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5EED_0006);
    let (mut steps, mut rejected) = (0usize, 0usize);
    for seq in 0..10_000 {
        let comparison = rng.random_bool(0.5);
        let source = |id: &str, d: f64| PlaybackSource {
            session_id: id.into(),
            window_start_s: 0.0,
            duration_s: d,
        };
        let mut sources = vec![source("a", rng.random_range(1.0..120.0))];
        if comparison {
            sources.push(source("b", rng.random_range(1.0..120.0)));
        }
        let mut s = PlaybackState::new("p", sources).map_err(|e| e.to_string())?;
        let duration = s.duration_s;
        for _ in 0..rng.random_range(1..40) {
            let before = s.revision;
            if rng.random_bool(0.4) {
                s.advance(rng.random_range(0.0..10.0));
                ensure!(s.revision == before, "seq {seq}: advance bumped revision");
            } else {
                let cmd = random_command(&mut rng, duration);
                match s.apply(cmd) {
                    Ok(()) => ensure!(s.revision == before + 1, "seq {seq}: revision {} after {before}", s.revision),
                    Err(_) => {
                        rejected += 1;
                        ensure!(s.revision == before, "seq {seq}: rejected command bumped revision");
                    }
                }
            }
            check_invariants(&s, duration, comparison).map_err(|e| format!("seq {seq}: {e}"))?;
            steps += 1;
        }
    }

    let mut max_wrap_err = 0.0f64;
    for _ in 0..10_000 {
        let duration = 100.0;
        let a = rng.random_range(0.0..90.0);
        let b = a + rng.random_range(0.05..10.0);
        let pos = rng.random_range(a..b);
        let rate = rng.random_range(MIN_RATE..=MAX_RATE);
        let dt = rng.random_range(0.0..30.0);
        let mut s = PlaybackState::new("p", vec![PlaybackSource {
            session_id: "a".into(),
            window_start_s: 0.0,
            duration_s: duration,
        }])
        .map_err(|e| e.to_string())?;
        for cmd in [
            TransportCommand::SetLoop { a, b },
            TransportCommand::Seek(pos),
            TransportCommand::SetRate(rate),
            TransportCommand::Play,
        ] {
            s.apply(cmd).map_err(|e| e.to_string())?;
        }
        s.advance(dt);
        let len = b - a;
        let x = pos + rate * dt - a;
        let expected = a + (x - len * (x / len).floor());
        ensure!((a..b).contains(&s.position_s), "wrap landed at {} outside [{a}, {b})", s.position_s);
        // positions a hair below b and exactly a are the same point on the loop
        let err = (s.position_s - expected).abs().min(len - (s.position_s - expected).abs());
        max_wrap_err = max_wrap_err.max(err);
    }
    ensure!(max_wrap_err <= 1e-9, "loop wrap error {max_wrap_err:e}");

    let mut s = PlaybackState::new("p", vec![PlaybackSource {
        session_id: "a".into(),
        window_start_s: 0.0,
        duration_s: 60.0,
    }])
    .map_err(|e| e.to_string())?;
    s.apply(TransportCommand::SetRate(0.25)).map_err(|e| e.to_string())?;
    s.apply(TransportCommand::Play).map_err(|e| e.to_string())?;
    s.advance(4.0);
    ensure!(s.position_s == 1.0, "rate 0.25 over 4.0 s advanced to {}", s.position_s);
    Ok(format!(
        "10,000 sequences, {steps} steps ({rejected} rejected commands); 10,000 loop wraps, max error {max_wrap_err:.1e} s; 0.25 x 4.0 s = 1.0 s"
    ))
}

// 7
async fn api_contract() -> Check {
    let fx = Fixture::mixed(36, 0x5EED_0007);
    let reply = get(fx.app(), "/api/sessions?ready_only=true").await;
    ensure!(reply.status == StatusCode::OK, "list status {}", reply.status);
    let body = reply.json();
    let listed = body["sessions"].as_array().ok_or("no sessions array")?;
    ensure!(listed.iter().all(|s| s["status"] == "ready"), "non-Ready session listed");
    let got: BTreeSet<String> = listed.iter().map(|s| s["id"].as_str().unwrap().to_string()).collect();
    let want: BTreeSet<String> = fx.ready_ids().into_iter().collect();
    ensure!(got == want, "ready set differs: {got:?} vs {want:?}");

    let mut rng = StdRng::seed_from_u64(0x5EED_0077);
    let ready: Vec<&GeneratedSession> = fx.sessions.iter().filter(|s| s.plan.outcome == Outcome::Ready).collect();
    let mut notes_seen = 0;
    for w in 0..50 {
        let s = ready.choose(&mut rng).unwrap();
        let t0 = rng.random_range(-1.0..s.plan.duration_s);
        let t1 = t0 + rng.random_range(0.05..8.0);
        let reply = get(fx.app(), &format!("/api/sessions/{}/pianoroll?t0={t0}&t1={t1}", s.plan.id)).await;
        ensure!(reply.status == StatusCode::OK, "window {w}: status {}", reply.status);
        let got = roll_from_json(&reply.json()["notes"]);
        let want = roll_oracle(s, t0, t1);
        ensure!(rolls_match(&got, &want, 1e-9), "window {w} of {} [{t0}, {t1}): {} notes vs {}", s.plan.id, got.len(), want.len());
        notes_seen += got.len();
    }

    let mut ranges = 0;
    for s in ready.iter().take(5) {
        let path = fx.dir.path().join("sessions").join(&s.plan.id).join("video.mp4");
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let first = rng.random_range(0..bytes.len());
            let last = rng.random_range(first..bytes.len());
            let reply = get_range(fx.app(), &format!("/assets/{}/video.mp4", s.plan.id), &format!("bytes={first}-{last}")).await;
            let len = last - first + 1;
            ensure!(reply.status == StatusCode::PARTIAL_CONTENT, "range status {}", reply.status);
            ensure!(reply.header("content-length") == Some(len.to_string().as_str()), "content-length {:?} for {len}", reply.header("content-length"));
            ensure!(reply.header("content-range") == Some(format!("bytes {first}-{last}/{}", bytes.len()).as_str()), "content-range {:?}", reply.header("content-range"));
            ensure!(reply.body == bytes[first..=last], "range body differs");
            ranges += 1;
        }
    }
    Ok(format!(
        "{} Ready of 36 listed; 50 piano-roll windows ({notes_seen} notes) match; {ranges} byte ranges served"
    , got.len()))
}

fn run(number: u32, name: &str, check: impl FnOnce() -> Check) -> bool {
    let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match &outcome {
        Ok(detail) => println!("[PASS] {number}. {name}: {detail}"),
        Err(reason) => println!("[FAIL] {number}. {name}: {reason}"),
    }
    outcome.is_ok()
}

fn main() -> ExitCode {
    let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
    let results = [
        run(1, "MIDI oracle equivalence", midi_oracle_equivalence),
        run(2, "VLQ round-trip", vlq_round_trip),
        run(3, "Timeline properties", timeline_properties),
        run(4, "Motion properties", motion_properties),
        run(5, "Catalog at 109 sessions", catalog_at_scale),
        run(6, "Transport state machine", transport_state_machine),
        run(7, "API contract", || runtime.block_on(api_contract())),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("\nacceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
