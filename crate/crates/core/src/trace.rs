//! Playback trace data model, JSON Lines I/O and temporal frame sampling.
//!
//! A trace file starts with a header line
//! `{"format": "tariplay-trace", "version": 1, "fps": <f64>, "meta": {...}}`
//! followed by one JSON object per frame. Matrices are column-major.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geometry::{is_simple, ScreenPoint};
use crate::math::{Mat4, Vec3};

pub const TRACE_FORMAT: &str = "tariplay-trace";
pub const TRACE_VERSION: u32 = 1;

const NORMAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid trace: {0}")]
    Validation(String),
}

impl TraceError {
    pub fn is_io(&self) -> bool {
        matches!(self, TraceError::Io { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TrackingState {
    Tracking,
    Paused,
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackableSnapshot {
    #[serde(rename = "id")]
    pub trackable_id: String,
    /// Local-to-world transform of the plane.
    pub pose: Mat4,
    /// Polygon on the local `y = 0` plane as `(x, z)` pairs, meters.
    #[serde(rename = "verts")]
    pub local_vertices: Vec<[f64; 2]>,
    #[serde(rename = "center")]
    pub center_world: Vec3,
    #[serde(rename = "normal")]
    pub normal_world: Vec3,
    #[serde(rename = "state")]
    pub tracking_state: TrackingState,
}

/// Screen size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Screen {
    pub w: u32,
    pub h: u32,
}

impl Screen {
    pub const fn new(w: u32, h: u32) -> Self {
        Self { w, h }
    }

    pub fn area(&self) -> f64 {
        self.w as f64 * self.h as f64
    }
}

impl From<[u32; 2]> for Screen {
    fn from(v: [u32; 2]) -> Self {
        Screen::new(v[0], v[1])
    }
}

impl From<Screen> for [u32; 2] {
    fn from(s: Screen) -> Self {
        [s.w, s.h]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    #[serde(rename = "t_ms")]
    pub timestamp_ms: i64,
    pub view: Mat4,
    #[serde(rename = "proj")]
    pub projection: Mat4,
    #[serde(rename = "cam_pos")]
    pub camera_position: Vec3,
    pub screen: Screen,
    pub trackables: Vec<TrackableSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TraceHeader {
    format: String,
    version: u32,
    fps: f64,
    #[serde(default)]
    meta: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaybackTrace {
    pub frames: Vec<FrameRecord>,
    pub source_fps: f64,
    /// Free-form tags (lighting, environment, simulator provenance, ...).
    pub metadata: BTreeMap<String, Value>,
}

impl PlaybackTrace {
    /// Builds a trace and checks every invariant.
    pub fn new(
        frames: Vec<FrameRecord>,
        source_fps: f64,
        metadata: BTreeMap<String, Value>,
    ) -> Result<Self, TraceError> {
        let trace = Self { frames, source_fps, metadata };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if !(self.source_fps.is_finite() && self.source_fps > 0.0) {
            return Err(TraceError::Validation(format!("fps must be positive, got {}", self.source_fps)));
        }
        let first = self
            .frames
            .first()
            .ok_or_else(|| TraceError::Validation("trace has no frames".into()))?;
        let mut prev: Option<i64> = None;
        for (i, frame) in self.frames.iter().enumerate() {
            validate_frame(frame).map_err(|m| TraceError::Validation(format!("frame {i}: {m}")))?;
            if let Some(p) = prev {
                if frame.timestamp_ms <= p {
                    return Err(TraceError::Validation(format!(
                        "frame {i}: timestamp {} ms does not increase (previous {p} ms)",
                        frame.timestamp_ms
                    )));
                }
            }
            if frame.screen != first.screen {
                return Err(TraceError::Validation(format!(
                    "frame {i}: screen {}x{} differs from {}x{}",
                    frame.screen.w, frame.screen.h, first.screen.w, first.screen.h
                )));
            }
            prev = Some(frame.timestamp_ms);
        }
        Ok(())
    }

    pub fn screen(&self) -> Screen {
        self.frames.first().map_or(Screen::new(0, 0), |f| f.screen)
    }

    /// Time from the first to the last frame, in milliseconds.
    pub fn span_ms(&self) -> i64 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => b.timestamp_ms - a.timestamp_ms,
            _ => 0,
        }
    }
}

fn validate_frame(frame: &FrameRecord) -> Result<(), String> {
    if frame.screen.w == 0 || frame.screen.h == 0 {
        return Err(format!("screen {}x{} has no area", frame.screen.w, frame.screen.h));
    }
    if !frame.view.is_finite() || !frame.projection.is_finite() {
        return Err("camera matrices must be finite".into());
    }
    if !frame.camera_position.is_finite() {
        return Err("camera position must be finite".into());
    }
    for t in &frame.trackables {
        validate_trackable(t).map_err(|m| format!("trackable {:?}: {m}", t.trackable_id))?;
    }
    Ok(())
}

fn validate_trackable(t: &TrackableSnapshot) -> Result<(), String> {
    if t.local_vertices.len() < 3 {
        return Err(format!("polygon needs at least 3 vertices, got {}", t.local_vertices.len()));
    }
    if !t.pose.is_finite() || !t.center_world.is_finite() || !t.normal_world.is_finite() {
        return Err("non-finite pose, center or normal".into());
    }
    if t.local_vertices.iter().flatten().any(|v| !v.is_finite()) {
        return Err("non-finite vertex".into());
    }
    let len = t.normal_world.length();
    if (len - 1.0).abs() > NORMAL_TOLERANCE {
        return Err(format!("normal must be unit length, got {len}"));
    }
    let pts: Vec<ScreenPoint> = t.local_vertices.iter().map(|v| ScreenPoint::new(v[0], v[1])).collect();
    if !is_simple(&pts) {
        return Err("polygon is not simple".into());
    }
    Ok(())
}

/// Reads and validates a trace from any buffered reader.
pub fn read_trace<R: BufRead>(reader: R) -> Result<PlaybackTrace, TraceError> {
    let mut header: Option<TraceHeader> = None;
    let mut frames = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| TraceError::Parse { line: line_no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| TraceError::Parse { line: line_no, message: e.to_string() };
        match header {
            None => {
                let h: TraceHeader = serde_json::from_str(&line).map_err(parse_err)?;
                if h.format != TRACE_FORMAT || h.version != TRACE_VERSION {
                    return Err(TraceError::Parse {
                        line: line_no,
                        message: format!("unsupported header {:?} v{}", h.format, h.version),
                    });
                }
                header = Some(h);
            }
            Some(_) => {
                let frame: FrameRecord = serde_json::from_str(&line).map_err(parse_err)?;
                frames.push(frame);
            }
        }
    }
    let header = header.ok_or_else(|| TraceError::Parse { line: 0, message: "missing header line".into() })?;
    PlaybackTrace::new(frames, header.fps, header.meta)
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<PlaybackTrace, TraceError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TraceError::Io { path: path.to_owned(), source })?;
    read_trace(BufReader::new(file))
}

pub fn write_trace<W: Write>(trace: &PlaybackTrace, mut out: W) -> io::Result<()> {
    let header = TraceHeader {
        format: TRACE_FORMAT.into(),
        version: TRACE_VERSION,
        fps: trace.source_fps,
        meta: trace.metadata.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for frame in &trace.frames {
        serde_json::to_writer(&mut out, frame)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_trace(trace: &PlaybackTrace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let path = path.as_ref();
    let io_err = |source| TraceError::Io { path: path.to_owned(), source };
    let file = File::create(path).map_err(io_err)?;
    write_trace(trace, BufWriter::new(file)).map_err(io_err)
}

/// Temporal decimation: keeps the earliest frame at or after each deadline
/// `k * 1000 / target_fps` ms. A target at or above the source rate is a no-op.
pub fn sample_frames(trace: &PlaybackTrace, target_fps: f64) -> Result<PlaybackTrace, TraceError> {
    if !(target_fps.is_finite() && target_fps > 0.0) {
        return Err(TraceError::Validation(format!("target fps must be positive, got {target_fps}")));
    }
    if trace.frames.is_empty() {
        return Err(TraceError::Validation("cannot sample an empty trace".into()));
    }
    if target_fps >= trace.source_fps {
        return Ok(trace.clone());
    }
    let period = 1000.0 / target_fps;
    let mut k: u64 = 0;
    let mut frames = Vec::new();
    for frame in &trace.frames {
        let t = frame.timestamp_ms as f64;
        if t + 1e-9 >= k as f64 * period {
            frames.push(frame.clone());
            // Skip every deadline this frame already satisfies.
            while (k as f64) * period <= t + 1e-9 {
                k += 1;
            }
        }
    }
    Ok(PlaybackTrace { frames, source_fps: target_fps, metadata: trace.metadata.clone() })
}
