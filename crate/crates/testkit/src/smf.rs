//! Standard MIDI File writer with a ground-truth note ledger.

use rand::seq::IndexedRandom;
use rand::Rng;

/// One note as written into the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LedgerNote {
    pub on_tick: u64,
    pub pitch: u8,
    pub channel: u8,
    pub off_tick: u64,
    pub velocity: u8,
}

#[derive(Debug, Clone)]
pub struct GeneratedSmf {
    pub bytes: Vec<u8>,
    pub format: u16,
    pub division: u16,
    /// `(tick, us_per_quarter)` in effect, sorted, first at tick 0.
    pub tempos: Vec<(u64, u32)>,
    /// Sorted by `(on_tick, pitch, channel)`.
    pub ledger: Vec<LedgerNote>,
}

#[derive(Debug, Clone, Copy)]
pub struct SmfParams {
    pub format: u16,
    pub notes: usize,
    /// Tempo changes including the one at tick 0.
    pub tempo_changes: usize,
    pub division: u16,
    pub tracks: usize,
}

/// Independent VLQ writer.
pub fn write_vlq(out: &mut Vec<u8>, value: u32) {
    let mut groups = [0u8; 4];
    let mut n = 0;
    let mut v = value;
    loop {
        groups[n] = (v & 0x7F) as u8;
        n += 1;
        v >>= 7;
        if v == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        out.push(if i > 0 { groups[i] | 0x80 } else { groups[i] });
    }
}

#[derive(Debug, Clone)]
enum Ev {
    Tempo(u32),
    On { ch: u8, key: u8, vel: u8 },
    /// `as_zero_on` writes note-on with velocity 0.
    Off { ch: u8, key: u8, as_zero_on: bool },
    Cc { ch: u8, ctl: u8, val: u8 },
    Text(Vec<u8>),
}

impl Ev {
    /// Order within one tick: tempo first, then note-offs, then others.
    fn rank(&self) -> u8 {
        match self {
            Ev::Tempo(_) => 0,
            Ev::Off { .. } => 1,
            _ => 2,
        }
    }
}

fn write_track(events: &mut [(u64, Ev)], use_running_status: bool) -> Vec<u8> {
    events.sort_by_key(|(t, e)| (*t, e.rank()));
    let mut out = Vec::new();
    let mut last_tick = 0;
    let mut running: Option<u8> = None;
    for (tick, ev) in events.iter() {
        write_vlq(&mut out, (tick - last_tick) as u32);
        last_tick = *tick;
        let mut channel_msg = |status: u8, data: &[u8], out: &mut Vec<u8>| {
            if !(use_running_status && running == Some(status)) {
                out.push(status);
            }
            running = Some(status);
            out.extend_from_slice(data);
        };
        match ev {
            Ev::Tempo(us) => {
                out.extend_from_slice(&[0xFF, 0x51, 0x03]);
                out.extend_from_slice(&us.to_be_bytes()[1..]);
            }
            Ev::Text(text) => {
                out.extend_from_slice(&[0xFF, 0x01]);
                write_vlq(&mut out, text.len() as u32);
                out.extend_from_slice(text);
            }
            Ev::On { ch, key, vel } => channel_msg(0x90 | ch, &[*key, *vel], &mut out),
            Ev::Off { ch, key, as_zero_on } => {
                if *as_zero_on {
                    channel_msg(0x90 | ch, &[*key, 0], &mut out)
                } else {
                    channel_msg(0x80 | ch, &[*key, 64], &mut out)
                }
            }
            Ev::Cc { ch, ctl, val } => channel_msg(0xB0 | ch, &[*ctl, *val], &mut out),
        }
    }
    write_vlq(&mut out, 0);
    out.extend_from_slice(&[0xFF, 0x2F, 0x00]);
    out
}

/// Assembles a file from raw track bodies (each already ending with EOT).
pub fn assemble(format: u16, division: u16, tracks: &[Vec<u8>]) -> Vec<u8> {
    let mut out = b"MThd".to_vec();
    out.extend(6u32.to_be_bytes());
    out.extend(format.to_be_bytes());
    out.extend((tracks.len() as u16).to_be_bytes());
    out.extend(division.to_be_bytes());
    for t in tracks {
        out.extend(b"MTrk");
        out.extend((t.len() as u32).to_be_bytes());
        out.extend(t);
    }
    out
}

/// Random SMF with known content.
///
/// Notes of the same channel and pitch never overlap, so pairing is
/// unambiguous. Note-offs are written either as 0x80 or as velocity-0
/// note-ons, and running status is used at random.
pub fn generate<R: Rng>(rng: &mut R, p: SmfParams) -> GeneratedSmf {
    assert!(p.format <= 1 && p.tempo_changes >= 1);
    let note_tracks = if p.format == 0 { 1 } else { p.tracks.max(1) };

    let mut ledger = Vec::with_capacity(p.notes);
    // busy-until tick per (channel, pitch)
    let mut busy = std::collections::HashMap::<(u8, u8), u64>::new();
    let mut cursor: u64 = 0;
    let mut track_of = Vec::with_capacity(p.notes);
    for _ in 0..p.notes {
        cursor += rng.random_range(0..=u64::from(p.division) / 2);
        let channel = rng.random_range(0..4u8);
        let pitch = rng.random_range(21..=108u8);
        let free = busy.get(&(channel, pitch)).copied().unwrap_or(0);
        let on_tick = cursor.max(free);
        let off_tick = on_tick + rng.random_range(1..=u64::from(p.division) * 2);
        busy.insert((channel, pitch), off_tick);
        ledger.push(LedgerNote {
            on_tick,
            pitch,
            channel,
            off_tick,
            velocity: rng.random_range(1..=127u8),
        });
        track_of.push(rng.random_range(0..note_tracks));
    }
    let last_tick = ledger.iter().map(|n| n.off_tick).max().unwrap_or(0);

    let mut tempos = vec![(0u64, rng.random_range(250_000..=1_000_000u32))];
    let mut ticks: Vec<u64> = (0..p.tempo_changes - 1)
        .map(|_| rng.random_range(1..=last_tick.max(1) + u64::from(p.division)))
        .collect();
    ticks.sort_unstable();
    ticks.dedup();
    for t in ticks {
        tempos.push((t, rng.random_range(200_000..=1_500_000u32)));
    }

    let mut tempo_events: Vec<(u64, Ev)> = tempos.iter().map(|&(t, us)| (t, Ev::Tempo(us))).collect();
    tempo_events.push((0, Ev::Text(b"generated".to_vec())));
    let mut per_track: Vec<Vec<(u64, Ev)>> = vec![Vec::new(); note_tracks];
    for (n, &t) in ledger.iter().zip(&track_of) {
        per_track[t].push((
            n.on_tick,
            Ev::On {
                ch: n.channel,
                key: n.pitch,
                vel: n.velocity,
            },
        ));
        per_track[t].push((
            n.off_tick,
            Ev::Off {
                ch: n.channel,
                key: n.pitch,
                as_zero_on: rng.random_bool(0.5),
            },
        ));
        if rng.random_bool(0.05) {
            per_track[t].push((
                n.on_tick,
                Ev::Cc {
                    ch: n.channel,
                    ctl: 64,
                    val: rng.random_range(0..128),
                },
            ));
        }
    }

    let running = rng.random_bool(0.5);
    let bodies = if p.format == 0 {
        let mut all = tempo_events;
        all.extend(per_track.pop().unwrap_or_default());
        vec![write_track(&mut all, running)]
    } else {
        let mut bodies = vec![write_track(&mut tempo_events, running)];
        for mut t in per_track {
            bodies.push(write_track(&mut t, running));
        }
        bodies
    };

    ledger.sort();
    GeneratedSmf {
        bytes: assemble(p.format, p.division, &bodies),
        format: p.format,
        division: p.division,
        tempos,
        ledger,
    }
}

/// Random parameters within the acceptance envelope.
pub fn random_params<R: Rng>(rng: &mut R) -> SmfParams {
    SmfParams {
        format: rng.random_range(0..=1),
        notes: rng.random_range(0..=500),
        tempo_changes: rng.random_range(1..=16),
        division: *[96u16, 120, 192, 240, 384, 480, 960].choose(rng).unwrap(),
        tracks: rng.random_range(1..=4),
    }
}
