//! Motion-capture ingestion: skeleton definitions, fixed-rate joint position
//! clips, interpolation, resampling, hand-region extraction and min-max
//! downsampled joint series for line plots.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("invalid skeleton: {0}")]
    Skeleton(String),
    #[error("motion csv row {row}, column {column}: {reason}")]
    Ingest { row: usize, column: String, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid time range [{t0}, {t1}]")]
    InvalidRange { t0: f64, t1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Body,
    LeftHand,
    RightHand,
}

impl FromStr for Region {
    type Err = MotionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "body" => Ok(Region::Body),
            "left_hand" => Ok(Region::LeftHand),
            "right_hand" => Ok(Region::RightHand),
            _ => Err(MotionError::InvalidArgument(format!("unknown region {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl FromStr for Axis {
    type Err = MotionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(MotionError::InvalidArgument(format!("unknown axis {s:?}"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["x", "y", "z"][self.index()])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    pub region: Region,
    pub parent: Option<usize>,
}

/// Named joint hierarchy in topological order with a single root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skeleton {
    name: String,
    joints: Vec<Joint>,
}

#[derive(Deserialize)]
struct SkeletonFile {
    name: String,
    joints: Vec<SkeletonFileJoint>,
}

#[derive(Deserialize)]
struct SkeletonFileJoint {
    name: String,
    region: Region,
    parent: Option<String>,
}

impl Skeleton {
    pub fn new(name: impl Into<String>, joints: Vec<Joint>) -> Result<Self, MotionError> {
        let mut seen = HashMap::new();
        let mut roots = 0;
        for (i, j) in joints.iter().enumerate() {
            if seen.insert(j.name.as_str(), i).is_some() {
                return Err(MotionError::Skeleton(format!("duplicate joint name {:?}", j.name)));
            }
            match j.parent {
                None => roots += 1,
                Some(p) if p >= i => {
                    return Err(MotionError::Skeleton(format!(
                        "joint {:?} has parent index {p} not before its own index {i}",
                        j.name
                    )))
                }
                Some(_) => {}
            }
        }
        if roots != 1 {
            return Err(MotionError::Skeleton(format!("expected exactly one root joint, found {roots}")));
        }
        Ok(Skeleton {
            name: name.into(),
            joints,
        })
    }

    /// Parses the `skeleton.json` format, where parents are given by name.
    pub fn from_json(text: &str) -> Result<Self, MotionError> {
        let file: SkeletonFile =
            serde_json::from_str(text).map_err(|e| MotionError::Skeleton(format!("skeleton.json: {e}")))?;
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut joints = Vec::with_capacity(file.joints.len());
        for (i, j) in file.joints.iter().enumerate() {
            let parent = match &j.parent {
                None => None,
                Some(p) => Some(*index.get(p.as_str()).ok_or_else(|| {
                    MotionError::Skeleton(format!("joint {:?} references parent {p:?} not defined before it", j.name))
                })?),
            };
            index.entry(j.name.as_str()).or_insert(i);
            joints.push(Joint {
                name: j.name.clone(),
                region: j.region,
                parent,
            });
        }
        Skeleton::new(file.name, joints)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn region_indices(&self, region: Region) -> Vec<usize> {
        self.joints
            .iter()
            .enumerate()
            .filter(|(_, j)| j.region == region)
            .map(|(i, _)| i)
            .collect()
    }
}

pub type Position = [f64; 3];

/// Fixed-rate joint positions in meters.
///
/// Frames are stored row-major: frame `f`, joint `j` lives at `f * J + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionClip {
    rate_hz: f64,
    skeleton_ref: String,
    joint_names: Vec<String>,
    positions: Vec<Position>,
}

impl MotionClip {
    pub fn new(
        rate_hz: f64,
        skeleton_ref: impl Into<String>,
        joint_names: Vec<String>,
        positions: Vec<Position>,
    ) -> Result<Self, MotionError> {
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(MotionError::InvalidArgument(format!("rate {rate_hz} Hz must be finite and > 0")));
        }
        let joints = joint_names.len();
        if joints == 0 {
            return Err(MotionError::InvalidArgument("clip has no joints".into()));
        }
        if !positions.len().is_multiple_of(joints) {
            return Err(MotionError::InvalidArgument(format!(
                "{} positions is not a multiple of {joints} joints",
                positions.len()
            )));
        }
        if positions.len() / joints < 2 {
            return Err(MotionError::InvalidArgument("clip needs at least 2 frames".into()));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(MotionError::InvalidArgument("non-finite joint position".into()));
        }
        Ok(MotionClip {
            rate_hz,
            skeleton_ref: skeleton_ref.into(),
            joint_names,
            positions,
        })
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn skeleton_ref(&self) -> &str {
        &self.skeleton_ref
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn frame_count(&self) -> usize {
        self.positions.len() / self.joint_names.len()
    }

    pub fn duration_s(&self) -> f64 {
        (self.frame_count() - 1) as f64 / self.rate_hz
    }

    pub fn frame(&self, f: usize) -> &[Position] {
        let j = self.joint_count();
        &self.positions[f * j..(f + 1) * j]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Position]> {
        self.positions.chunks_exact(self.joint_count())
    }

    pub fn frame_time(&self, f: usize) -> f64 {
        f as f64 / self.rate_hz
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    /// Inclusive frame index range whose frame times lie in `[t0, t1]`.
    fn frames_within(&self, t0: f64, t1: f64) -> Option<(usize, usize)> {
        let last = self.frame_count() - 1;
        let guess = |t: f64| (t * self.rate_hz).clamp(0.0, last as f64) as usize;
        let mut first = guess(t0);
        while first > 0 && self.frame_time(first - 1) >= t0 {
            first -= 1;
        }
        while first <= last && self.frame_time(first) < t0 {
            first += 1;
        }
        let mut end = guess(t1);
        while end < last && self.frame_time(end + 1) <= t1 {
            end += 1;
        }
        loop {
            if self.frame_time(end) <= t1 {
                break;
            }
            if end == 0 {
                return None;
            }
            end -= 1;
        }
        (first <= end).then_some((first, end))
    }

    /// Linearly interpolated pose at `local_t`, clamped to the clip span.
    pub fn pose_at(&self, local_t: f64) -> Result<Vec<Position>, MotionError> {
        if !local_t.is_finite() {
            return Err(MotionError::InvalidArgument(format!("time {local_t} is not finite")));
        }
        let last = self.frame_count() - 1;
        let mut x = (local_t * self.rate_hz).clamp(0.0, last as f64);
        // snap knots so frame times reproduce stored frames exactly
        let nearest = x.round();
        if (x - nearest).abs() < 1e-9 {
            x = nearest;
        }
        let k = (x.floor() as usize).min(last);
        let frac = x - k as f64;
        if frac == 0.0 || k == last {
            return Ok(self.frame(k).to_vec());
        }
        let (a, b) = (self.frame(k), self.frame(k + 1));
        Ok(a.iter()
            .zip(b)
            .map(|(p, q)| std::array::from_fn(|i| p[i] + (q[i] - p[i]) * frac))
            .collect())
    }

    /// Resamples to `new_rate_hz` by sampling `pose_at(k / new_rate_hz)`.
    pub fn resample(&self, new_rate_hz: f64) -> Result<MotionClip, MotionError> {
        if !(new_rate_hz.is_finite() && new_rate_hz > 0.0) {
            return Err(MotionError::InvalidArgument(format!("rate {new_rate_hz} Hz must be finite and > 0")));
        }
        let last = (self.duration_s() * new_rate_hz + 1e-9).floor() as usize;
        let last = last.max(1);
        let mut positions = Vec::with_capacity((last + 1) * self.joint_count());
        for k in 0..=last {
            positions.extend(self.pose_at(k as f64 / new_rate_hz)?);
        }
        MotionClip::new(new_rate_hz, self.skeleton_ref.clone(), self.joint_names.clone(), positions)
    }

    /// Sub-clip with only the joints of `region`, in skeleton order.
    pub fn extract_region(&self, skeleton: &Skeleton, region: Region) -> Result<MotionClip, MotionError> {
        let wanted: Vec<&str> = skeleton
            .joints()
            .iter()
            .filter(|j| j.region == region)
            .map(|j| j.name.as_str())
            .collect();
        if wanted.is_empty() {
            return Err(MotionError::InvalidArgument(format!("region {region:?} has no joints")));
        }
        let columns = wanted
            .iter()
            .map(|name| {
                self.joint_index(name)
                    .ok_or_else(|| MotionError::InvalidArgument(format!("clip has no joint {name:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let positions = self
            .frames()
            .flat_map(|frame| columns.iter().map(move |&c| frame[c]))
            .collect();
        MotionClip::new(
            self.rate_hz,
            self.skeleton_ref.clone(),
            wanted.into_iter().map(String::from).collect(),
            positions,
        )
    }

    /// One coordinate of one joint over `[t0, t1]`, at most `max_points` long.
    ///
    /// When the window holds more samples than `max_points`, samples are
    /// split into `max_points / 2` buckets and each bucket contributes its
    /// minimum and maximum in time order.
    pub fn joint_series(
        &self,
        joint: &str,
        axis: Axis,
        t0: f64,
        t1: f64,
        max_points: usize,
    ) -> Result<Vec<SeriesPoint>, MotionError> {
        if !t0.is_finite() || !t1.is_finite() || t0 >= t1 {
            return Err(MotionError::InvalidRange { t0, t1 });
        }
        if max_points < 2 {
            return Err(MotionError::InvalidArgument(format!("max_points {max_points} < 2")));
        }
        let j = self
            .joint_index(joint)
            .ok_or_else(|| MotionError::InvalidArgument(format!("unknown joint {joint:?}")))?;
        let a = axis.index();
        let Some((first, end)) = self.frames_within(t0, t1) else {
            return Ok(Vec::new());
        };
        let point = |f: usize| SeriesPoint {
            t: self.frame_time(f),
            v: self.frame(f)[j][a],
        };
        let count = end - first + 1;
        if count <= max_points {
            return Ok((first..=end).map(point).collect());
        }

        let buckets = max_points / 2;
        let mut out = Vec::with_capacity(buckets * 2);
        for b in 0..buckets {
            let lo = first + b * count / buckets;
            let hi = first + (b + 1) * count / buckets;
            let value = |f: usize| self.frame(f)[j][a];
            let mut min_f = lo;
            let mut max_f = lo;
            for f in lo..hi {
                if value(f) < value(min_f) {
                    min_f = f;
                }
                if value(f) > value(max_f) {
                    max_f = f;
                }
            }
            let (p, q) = if min_f <= max_f { (min_f, max_f) } else { (max_f, min_f) };
            out.push(point(p));
            if q != p {
                out.push(point(q));
            }
        }
        Ok(out)
    }
}

/// Parses the motion CSV format against `skeleton`.
///
/// The header is `frame,<joint>_x,<joint>_y,<joint>_z,...`; every skeleton
/// joint must appear exactly once per axis, in any column order. Frame
/// indices must run `0..F` without gaps.
pub fn parse_motion_csv(text: &str, skeleton: &Skeleton, rate_hz: f64) -> Result<MotionClip, MotionError> {
    let ingest = |row: usize, column: &str, reason: String| MotionError::Ingest {
        row,
        column: column.to_string(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| ingest(1, "", format!("unreadable header: {e}")))?
        .clone();
    if headers.get(0) != Some("frame") {
        return Err(ingest(1, headers.get(0).unwrap_or(""), "first column must be `frame`".into()));
    }

    let joints = skeleton.len();
    // column index -> slot in the per-frame [joint][axis] layout
    let mut slots: Vec<usize> = Vec::with_capacity(headers.len() - 1);
    let mut filled = vec![false; joints * 3];
    for name in headers.iter().skip(1) {
        let slot = name
            .rsplit_once('_')
            .and_then(|(joint, axis)| Some((skeleton.joint_index(joint)?, axis.parse::<Axis>().ok()?)))
            .map(|(j, a)| j * 3 + a.index())
            .ok_or_else(|| ingest(1, name, "column does not match any skeleton joint axis".into()))?;
        if std::mem::replace(&mut filled[slot], true) {
            return Err(ingest(1, name, "duplicate column".into()));
        }
        slots.push(slot);
    }
    if let Some(missing) = filled.iter().position(|f| !f) {
        let joint = &skeleton.joints()[missing / 3].name;
        let axis = ["x", "y", "z"][missing % 3];
        return Err(ingest(1, &format!("{joint}_{axis}"), "missing column".into()));
    }

    let mut positions: Vec<Position> = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut frame = 0usize;
    loop {
        let row = frame + 2;
        match reader.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(ingest(row, "", e.to_string())),
        }
        if record.len() != headers.len() {
            return Err(ingest(
                row,
                "",
                format!("expected {} cells, found {}", headers.len(), record.len()),
            ));
        }
        let index: usize = record[0]
            .parse()
            .map_err(|_| ingest(row, "frame", format!("non-integer frame index {:?}", &record[0])))?;
        if index != frame {
            return Err(ingest(row, "frame", format!("expected frame {frame}, found {index}")));
        }
        let base = positions.len();
        positions.resize(base + joints, [0.0; 3]);
        for (cell, (&slot, name)) in record.iter().skip(1).zip(slots.iter().zip(headers.iter().skip(1))) {
            let v: f64 = cell
                .parse()
                .map_err(|_| ingest(row, name, format!("non-numeric value {cell:?}")))?;
            if !v.is_finite() {
                return Err(ingest(row, name, format!("non-finite value {cell:?}")));
            }
            positions[base + slot / 3][slot % 3] = v;
        }
        frame += 1;
    }
    if frame < 2 {
        return Err(ingest(frame + 2, "frame", format!("clip needs at least 2 frames, found {frame}")));
    }
    let names = skeleton.joints().iter().map(|j| j.name.clone()).collect();
    MotionClip::new(rate_hz, skeleton.name(), names, positions)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub v: f64,
}
