//! Motion CSV and skeleton.json writers.

use std::fmt::Write as _;

use serde_json::json;

/// `(name, region, parent name)`
pub type JointSpec = (&'static str, &'static str, Option<&'static str>);

/// A small body + two hands skeleton.
pub const PIANIST_JOINTS: &[JointSpec] = &[
    ("pelvis", "body", None),
    ("spine", "body", Some("pelvis")),
    ("neck", "body", Some("spine")),
    ("l_shoulder", "body", Some("spine")),
    ("l_elbow", "body", Some("l_shoulder")),
    ("l_wrist", "left_hand", Some("l_elbow")),
    ("l_index", "left_hand", Some("l_wrist")),
    ("r_shoulder", "body", Some("spine")),
    ("r_elbow", "body", Some("r_shoulder")),
    ("r_wrist", "right_hand", Some("r_elbow")),
    ("r_index", "right_hand", Some("r_wrist")),
];

pub fn skeleton_json(name: &str, joints: &[JointSpec]) -> String {
    let joints: Vec<_> = joints
        .iter()
        .map(|(n, r, p)| json!({"name": n, "region": r, "parent": p}))
        .collect();
    serde_json::to_string_pretty(&json!({"name": name, "joints": joints})).unwrap()
}

/// Writes `frames[f][j] = [x, y, z]` in the motion CSV format.
pub fn motion_csv(joint_names: &[&str], frames: &[Vec<[f64; 3]>]) -> String {
    let mut out = String::from("frame");
    for n in joint_names {
        write!(out, ",{n}_x,{n}_y,{n}_z").unwrap();
    }
    out.push('\n');
    for (f, frame) in frames.iter().enumerate() {
        write!(out, "{f}").unwrap();
        for p in frame {
            // `{}` on f64 prints the shortest round-tripping representation
            write!(out, ",{},{},{}", p[0], p[1], p[2]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Deterministic smooth trajectories for `joints` over `frames` samples.
pub fn synthetic_frames(joints: usize, frames: usize, rate_hz: f64, phase: f64) -> Vec<Vec<[f64; 3]>> {
    (0..frames)
        .map(|f| {
            let t = f as f64 / rate_hz;
            (0..joints)
                .map(|j| {
                    let j = j as f64;
                    [
                        0.1 * j + 0.05 * (t * 1.3 + phase + j).sin(),
                        1.0 + 0.02 * j + 0.03 * (t * 0.7 + j).cos(),
                        0.2 * (t * 0.5 + phase).sin() - 0.01 * j,
                    ]
                })
                .collect()
        })
        .collect()
}
