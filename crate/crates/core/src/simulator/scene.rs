use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geometry::{is_simple, point_in_polygon, ScreenPoint, ScreenPolygon};
use crate::math::{Mat4, Vec3};
use crate::trace::{FrameRecord, PlaybackTrace, Screen, TrackableSnapshot, TrackingState, TraceError};

const AXIS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid jitter: {0}")]
    InvalidJitter(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

fn default_up() -> Vec3 {
    Vec3::new(0.0, 1.0, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraKeyframe {
    pub t_ms: i64,
    pub position: Vec3,
    /// Look-at point.
    pub target: Vec3,
    #[serde(default = "default_up")]
    pub up: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub vfov_deg: f64,
    pub near: f64,
    pub far: f64,
}

impl Default for Intrinsics {
    fn default() -> Self {
        Self { vfov_deg: 60.0, near: 0.1, far: 100.0 }
    }
}

/// A planar rectangle (or custom polygon) in the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePlane {
    pub id: String,
    pub center: Vec3,
    pub normal: Vec3,
    pub axis_u: Vec3,
    pub axis_v: Vec3,
    /// Full side lengths along `axis_u` and `axis_v`, meters.
    pub extents: [f64; 2],
    #[serde(default)]
    pub detect_delay_ms: i64,
    /// Half-open `[from, to)` windows in which tracking is lost.
    #[serde(default)]
    pub lost_intervals: Vec<[i64; 2]>,
    /// Optional polygon in `(u, v)` plane coordinates replacing the rectangle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 2]>>,
}

impl ScenePlane {
    pub fn is_detected(&self, t_ms: i64) -> bool {
        t_ms >= self.detect_delay_ms && !self.lost_intervals.iter().any(|[a, b]| *a <= t_ms && t_ms < *b)
    }

    /// Outline in plane coordinates.
    pub fn local_outline(&self) -> Vec<[f64; 2]> {
        if let Some(v) = &self.vertices {
            return v.clone();
        }
        let (hu, hv) = (self.extents[0] / 2.0, self.extents[1] / 2.0);
        vec![[-hu, -hv], [hu, -hv], [hu, hv], [-hu, hv]]
    }

    /// Local-to-world transform: local x along `axis_u`, y along the normal, z along `axis_v`.
    pub fn pose(&self) -> Mat4 {
        Mat4::from_basis(self.axis_u, self.normal, self.axis_v, self.center)
    }

    fn contains_local(&self, u: f64, v: f64) -> bool {
        match &self.vertices {
            None => u.abs() <= self.extents[0] / 2.0 && v.abs() <= self.extents[1] / 2.0,
            Some(verts) => {
                let poly = ScreenPolygon::new(verts.iter().map(|p| ScreenPoint::new(p[0], p[1])).collect());
                point_in_polygon(ScreenPoint::new(u, v), &poly)
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        let unit = |v: Vec3| (v.length() - 1.0).abs() <= AXIS_TOLERANCE;
        if !(unit(self.normal) && unit(self.axis_u) && unit(self.axis_v)) {
            return Err("normal and axes must be unit vectors".into());
        }
        let ortho = self.normal.dot(self.axis_u).abs() <= AXIS_TOLERANCE
            && self.normal.dot(self.axis_v).abs() <= AXIS_TOLERANCE
            && self.axis_u.dot(self.axis_v).abs() <= AXIS_TOLERANCE;
        if !ortho {
            return Err("normal and axes must be mutually orthogonal".into());
        }
        if !(self.extents[0] > 0.0 && self.extents[1] > 0.0) {
            return Err("extents must be positive".into());
        }
        if self.detect_delay_ms < 0 {
            return Err("detect_delay_ms must be >= 0".into());
        }
        if self.lost_intervals.iter().any(|[a, b]| a > b) {
            return Err("lost interval ends before it starts".into());
        }
        if let Some(v) = &self.vertices {
            let pts: Vec<ScreenPoint> = v.iter().map(|p| ScreenPoint::new(p[0], p[1])).collect();
            if !is_simple(&pts) {
                return Err("custom vertices must form a simple polygon".into());
            }
        }
        Ok(())
    }
}

/// Per-run detection noise applied when rendering a trace.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JitterConfig {
    /// Standard deviation of the Gaussian noise on each outline coordinate, meters.
    pub vertex_noise_m: f64,
    /// Per-frame probability that a detected plane is missing from the frame.
    pub dropout_prob: f64,
}

impl JitterConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.vertex_noise_m.is_finite() && self.vertex_noise_m >= 0.0) {
            return Err(SimError::InvalidJitter(format!("vertex_noise_m {}", self.vertex_noise_m)));
        }
        if !(0.0..=1.0).contains(&self.dropout_prob) {
            return Err(SimError::InvalidJitter(format!("dropout_prob {}", self.dropout_prob)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScene {
    #[serde(default)]
    pub name: String,
    pub planes: Vec<ScenePlane>,
    pub camera_path: Vec<CameraKeyframe>,
    #[serde(default)]
    pub intrinsics: Intrinsics,
    pub screen: Screen,
    pub fps: f64,
    pub duration_ms: i64,
    /// Detection noise used when the scene is replayed for repeated runs.
    #[serde(default)]
    pub jitter: JitterConfig,
    /// Free-form tags copied into generated trace headers.
    #[serde(default)]
    pub meta: BTreeMap<String, Value>,
}

/// Interpolated camera state at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub eye: Vec3,
    pub target: Vec3,
    pub up: Vec3,
}

/// One ray/plane intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct RayHit {
    pub plane_id: String,
    pub distance: f64,
    pub detected: bool,
}

impl SimScene {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| SimError::InvalidScene(m);
        if self.screen.w == 0 || self.screen.h == 0 {
            return Err(bad("screen has no area".into()));
        }
        if !(self.fps > 0.0 && self.fps <= 1000.0) {
            return Err(bad(format!("fps must be in (0, 1000], got {}", self.fps)));
        }
        if self.duration_ms <= 0 {
            return Err(bad("duration_ms must be positive".into()));
        }
        let i = &self.intrinsics;
        if !(i.vfov_deg > 0.0 && i.vfov_deg < 180.0 && i.near > 0.0 && i.far > i.near) {
            return Err(bad(format!("bad intrinsics {i:?}")));
        }
        let mut ids = BTreeSet::new();
        for p in &self.planes {
            if !ids.insert(p.id.as_str()) {
                return Err(bad(format!("duplicate plane id {:?}", p.id)));
            }
            p.validate().map_err(|m| bad(format!("plane {:?}: {m}", p.id)))?;
        }
        if self.camera_path.is_empty() {
            return Err(bad("camera path needs at least one keyframe".into()));
        }
        let mut prev = None;
        for k in &self.camera_path {
            if k.t_ms < 0 || k.t_ms > self.duration_ms {
                return Err(bad(format!("keyframe at {} ms outside [0, {}]", k.t_ms, self.duration_ms)));
            }
            if prev.is_some_and(|p| k.t_ms <= p) {
                return Err(bad(format!("keyframe times must increase (at {} ms)", k.t_ms)));
            }
            if Mat4::look_at(k.position, k.target, k.up).is_none() {
                return Err(bad(format!("degenerate look-at at {} ms", k.t_ms)));
            }
            prev = Some(k.t_ms);
        }
        self.jitter.validate()
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let scene: SimScene =
            serde_json::from_str(text).map_err(|e| SimError::InvalidScene(format!("parse error: {e}")))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    /// Number of frames rendered for the scene.
    pub fn frame_count(&self) -> usize {
        (self.duration_ms as f64 * self.fps / 1000.0).floor() as usize
    }

    pub fn frame_time_ms(&self, i: usize) -> i64 {
        (i as f64 * 1000.0 / self.fps).round() as i64
    }

    /// Piecewise-linear interpolation of eye and look-at point.
    pub fn camera_at(&self, t_ms: i64) -> CameraPose {
        let path = &self.camera_path;
        let pose = |k: &CameraKeyframe| CameraPose { eye: k.position, target: k.target, up: k.up };
        if t_ms <= path[0].t_ms {
            return pose(&path[0]);
        }
        for w in path.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if t_ms <= b.t_ms {
                let s = (t_ms - a.t_ms) as f64 / (b.t_ms - a.t_ms) as f64;
                return CameraPose {
                    eye: a.position.lerp(b.position, s),
                    target: a.target.lerp(b.target, s),
                    up: a.up.lerp(b.up, s),
                };
            }
        }
        pose(path.last().expect("non-empty path"))
    }

    pub fn view_matrix(&self, t_ms: i64) -> Mat4 {
        let c = self.camera_at(t_ms);
        Mat4::look_at(c.eye, c.target, c.up).unwrap_or(Mat4::IDENTITY)
    }

    pub fn projection_matrix(&self) -> Mat4 {
        let i = &self.intrinsics;
        Mat4::perspective(i.vfov_deg, self.screen.w as f64 / self.screen.h as f64, i.near, i.far)
    }

    pub fn plane(&self, id: &str) -> Option<&ScenePlane> {
        self.planes.iter().find(|p| p.id == id)
    }
}

/// Renders the scene into a trace. Distinct `jitter_seed`s model repeated,
/// non-deterministic detection runs over the same recording.
pub fn generate_trace(scene: &SimScene, jitter_seed: u64, jitter: &JitterConfig) -> Result<PlaybackTrace, SimError> {
    scene.validate()?;
    jitter.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(jitter_seed);
    let noise = Normal::new(0.0, jitter.vertex_noise_m.max(f64::MIN_POSITIVE))
        .map_err(|e| SimError::InvalidJitter(e.to_string()))?;
    let projection = scene.projection_matrix();
    let mut frames = Vec::with_capacity(scene.frame_count());
    for i in 0..scene.frame_count() {
        let t = scene.frame_time_ms(i);
        let camera = scene.camera_at(t);
        let mut trackables = Vec::new();
        for plane in &scene.planes {
            if !plane.is_detected(t) {
                continue;
            }
            let dropped = rng.random::<f64>() < jitter.dropout_prob;
            let outline = plane.local_outline();
            let noisy: Vec<[f64; 2]> = if jitter.vertex_noise_m > 0.0 {
                outline.iter().map(|v| [v[0] + noise.sample(&mut rng), v[1] + noise.sample(&mut rng)]).collect()
            } else {
                outline.clone()
            };
            if dropped {
                continue;
            }
            let pts: Vec<ScreenPoint> = noisy.iter().map(|v| ScreenPoint::new(v[0], v[1])).collect();
            let local_vertices = if is_simple(&pts) { noisy } else { outline };
            trackables.push(TrackableSnapshot {
                trackable_id: plane.id.clone(),
                pose: plane.pose(),
                local_vertices,
                center_world: plane.center,
                normal_world: plane.normal,
                tracking_state: TrackingState::Tracking,
            });
        }
        frames.push(FrameRecord {
            timestamp_ms: t,
            view: Mat4::look_at(camera.eye, camera.target, camera.up).unwrap_or(Mat4::IDENTITY),
            projection,
            camera_position: camera.eye,
            screen: scene.screen,
            trackables,
        });
    }
    let mut metadata = scene.meta.clone();
    metadata.insert("generator".into(), Value::from("simulator"));
    metadata.insert("scene".into(), serde_json::to_value(scene).expect("scene serializes"));
    metadata.insert("jitter".into(), serde_json::to_value(jitter).expect("jitter serializes"));
    metadata.insert("jitter_seed".into(), Value::from(jitter_seed));
    Ok(PlaybackTrace::new(frames, scene.fps, metadata)?)
}

/// Recovers the scene and jitter a simulator trace was rendered from.
pub fn scene_from_trace(trace: &PlaybackTrace) -> Option<Result<(SimScene, JitterConfig), SimError>> {
    let scene_value = trace.metadata.get("scene")?;
    let parsed = (|| {
        let scene: SimScene = serde_json::from_value(scene_value.clone())
            .map_err(|e| SimError::InvalidScene(format!("embedded scene: {e}")))?;
        scene.validate()?;
        let jitter = match trace.metadata.get("jitter") {
            Some(j) => serde_json::from_value(j.clone()).map_err(|e| SimError::InvalidJitter(e.to_string()))?,
            None => scene.jitter,
        };
        Ok((scene, jitter))
    })();
    Some(parsed)
}

/// World-space ray through a screen pixel at time `t_ms`.
fn pixel_ray(scene: &SimScene, t_ms: i64, p: ScreenPoint) -> Option<(Vec3, Vec3)> {
    let cam = scene.camera_at(t_ms);
    let forward = (cam.target - cam.eye).normalized()?;
    let right = forward.cross(cam.up).normalized()?;
    let up = right.cross(forward);
    let (w, h) = (scene.screen.w as f64, scene.screen.h as f64);
    let tan_half = (scene.intrinsics.vfov_deg.to_radians() / 2.0).tan();
    let x_ndc = 2.0 * p.x / w - 1.0;
    let y_ndc = 1.0 - 2.0 * p.y / h;
    let dir = forward + right * (x_ndc * tan_half * w / h) + up * (y_ndc * tan_half);
    Some((cam.eye, dir))
}

/// Every plane the pixel's ray passes through within the view depth range,
/// nearest first, whether or not the plane is currently detected.
pub fn ray_hits(scene: &SimScene, t_ms: i64, p: ScreenPoint) -> Vec<RayHit> {
    let Some((eye, dir)) = pixel_ray(scene, t_ms, p) else {
        return Vec::new();
    };
    let mut hits: Vec<RayHit> = scene
        .planes
        .iter()
        .filter_map(|plane| {
            let denom = plane.normal.dot(dir);
            if denom.abs() < 1e-12 {
                return None;
            }
            // `dir` has unit forward component, so `s` is the view depth.
            let s = plane.normal.dot(plane.center - eye) / denom;
            if s < scene.intrinsics.near || s > scene.intrinsics.far {
                return None;
            }
            let rel = eye + dir * s - plane.center;
            plane.contains_local(rel.dot(plane.axis_u), rel.dot(plane.axis_v)).then(|| RayHit {
                plane_id: plane.id.clone(),
                distance: s,
                detected: plane.is_detected(t_ms),
            })
        })
        .collect();
    hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.plane_id.cmp(&b.plane_id)));
    hits
}

/// Nearest currently-detected plane under the screen point, if any.
pub fn hit_test(scene: &SimScene, t_ms: i64, p: ScreenPoint) -> Option<String> {
    ray_hits(scene, t_ms, p).into_iter().find(|h| h.detected).map(|h| h.plane_id)
}

/// Fraction of an `n x n` grid of pixel centers that hits a detected plane.
pub fn detected_coverage(scene: &SimScene, t_ms: i64, n: usize) -> f64 {
    let (w, h) = (scene.screen.w as f64, scene.screen.h as f64);
    let mut hits = 0;
    for iy in 0..n {
        for ix in 0..n {
            let p = ScreenPoint::new((ix as f64 + 0.5) * w / n as f64, (iy as f64 + 0.5) * h / n as f64);
            if hit_test(scene, t_ms, p).is_some() {
                hits += 1;
            }
        }
    }
    hits as f64 / (n * n) as f64
}
