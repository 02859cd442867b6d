//! Text reports for the `scan` and `validate` commands.

use std::fmt::Write;

use pianoview_core::catalog::{CatalogIndex, SessionRecord, SessionStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_READY: i32 = 1;
pub const EXIT_NOT_FOUND: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub text: String,
    pub exit_code: i32,
}

fn or_dash(s: Option<String>) -> String {
    s.unwrap_or_else(|| "-".into())
}

/// One row per session, then totals. Fails when any session is not Ready.
pub fn scan_report(index: &CatalogIndex) -> Report {
    let rows: Vec<[String; 7]> = index
        .records()
        .iter()
        .map(|r| {
            [
                r.id.clone(),
                r.status.to_string(),
                r.performer_name.clone(),
                or_dash(r.skill.map(|s| format!("{s:?}").to_lowercase())),
                or_dash(r.recorded_date.map(|d| d.to_string())),
                or_dash(r.duration_s.map(|d| format!("{d:.2}"))),
                r.warnings.len().to_string(),
            ]
        })
        .collect();
    let header = ["ID", "STATUS", "PERFORMER", "SKILL", "DATE", "DURATION_S", "WARNINGS"];
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut text = String::new();
    let mut line = |cells: &[String]| {
        let mut out = String::new();
        for (cell, w) in cells.iter().zip(widths) {
            let _ = write!(out, "{cell:<w$}  ");
        }
        text.push_str(out.trim_end());
        text.push('\n');
    };
    line(&header.map(String::from));
    for row in &rows {
        line(row);
    }
    let s = index.summary();
    let _ = writeln!(
        text,
        "\n{} sessions: {} ready, {} unaligned, {} incomplete",
        s.total, s.ready, s.unaligned, s.incomplete
    );
    Report {
        text,
        exit_code: if s.ready == s.total { EXIT_OK } else { EXIT_NOT_READY },
    }
}

fn describe(r: &SessionRecord, text: &mut String) {
    let _ = writeln!(text, "session {}: {}", r.id, r.status);
    if let Some(w) = r.window {
        let _ = writeln!(text, "overlap window: [{:.6}, {:.6}] ({:.3} s)", w.start_s, w.end_s, w.duration());
    }
    for track in r.manifest.tracks() {
        let _ = writeln!(
            text,
            "  {:<6} offset {:+.6} scale {:.6} local span [{:.6}, {:.6}]",
            track.kind.as_str(),
            track.clock.offset_s(),
            track.clock.scale(),
            track.local_span.start_s,
            track.local_span.end_s
        );
    }
    let midi_warnings = r.data.midi.as_ref().map_or(&[][..], |m| &m.warnings[..]);
    if r.warnings.is_empty() && midi_warnings.is_empty() {
        text.push_str("no warnings\n");
    }
    for w in &r.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    for w in midi_warnings {
        let _ = writeln!(text, "midi warning: {w}");
    }
}

/// Status, clocks and every warning for one session.
pub fn validate_report(index: &CatalogIndex, id: &str) -> Report {
    let Some(record) = index.get(id) else {
        return Report {
            text: format!("session {id:?} not found\n"),
            exit_code: EXIT_NOT_FOUND,
        };
    };
    let mut text = String::new();
    describe(record, &mut text);
    Report {
        text,
        exit_code: if record.status == SessionStatus::Ready { EXIT_OK } else { EXIT_NOT_READY },
    }
}
