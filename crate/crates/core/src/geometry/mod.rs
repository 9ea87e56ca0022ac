//! Screen-space computational geometry: projection, clipping, occlusion
//! subtraction and conservative inscribed rectangles.
//!
//! Screen coordinates follow the mobile convention: origin at the top-left
//! corner, `y` growing downward, units in pixels.

mod clip;
mod inscribed;
mod occlusion;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Mat4;

pub use clip::{clip_polygon, line_param_t, screen_clip_polygon};
pub use inscribed::{inscribed_rect, inscribed_rect_traced};
pub use occlusion::{convex_decompose, subtract_occluders};

/// Numeric tolerances shared by the kernel.
pub mod tolerance {
    /// Distance (px) within which a point counts as lying on a polygon edge.
    pub const CONTAINMENT_PX: f64 = 1e-6;
    /// Below this magnitude the intersection denominator is treated as parallel.
    pub const PARALLEL: f64 = 1e-12;
    /// Clip-space `w` at or below this value marks a vertex as behind the camera.
    pub const BEHIND_CAMERA_W: f64 = 1e-9;
    /// Polygons with less area (px²) than this are considered empty.
    pub const SLIVER_AREA_PX2: f64 = 1e-9;
    /// Inset (px) applied to every visible box so it never shares an edge with
    /// its own outline or an occluder's.
    pub const BOX_INSET_PX: f64 = 1e-4;
    /// Fraction of the current extent a side moves per shrink pass.
    pub const SHRINK_STEP: f64 = 0.025;
    /// Safety cap on shrink passes.
    pub const MAX_SHRINK_ITERATIONS: usize = 200;
    /// A rectangle whose width or height drops to this (px) is degenerate.
    pub const MIN_EXTENT_PX: f64 = 1.0;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("clip polygon is not convex")]
    NonConvexClip,
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("projection produced a non-finite coordinate")]
    NonFinite,
    #[error("screen dimensions must be positive, got {0}x{1}")]
    BadScreen(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScreenPoint {
    pub x: f64,
    pub y: f64,
}

impl ScreenPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn lerp(self, other: ScreenPoint, t: f64) -> ScreenPoint {
        ScreenPoint::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }

    pub fn distance(self, other: ScreenPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// `(b - a) x (p - a)`; positive when `p` is to the left of `a -> b` in a y-up frame.
pub(crate) fn cross(a: ScreenPoint, b: ScreenPoint, p: ScreenPoint) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScreenPolygon {
    pub vertices: Vec<ScreenPoint>,
}

impl ScreenPolygon {
    pub fn new(vertices: Vec<ScreenPoint>) -> Self {
        Self { vertices }
    }

    pub fn from_xy(points: &[(f64, f64)]) -> Self {
        Self::new(points.iter().map(|&(x, y)| ScreenPoint::new(x, y)).collect())
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// A polygon with fewer than three vertices covers no area.
    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    /// Axis-aligned bounds, or `None` for an empty polygon.
    pub fn bounds(&self) -> Option<Rect> {
        let first = self.vertices.first()?;
        let mut r = Rect { x_min: first.x, y_min: first.y, x_max: first.x, y_max: first.y };
        for p in &self.vertices[1..] {
            r.x_min = r.x_min.min(p.x);
            r.x_max = r.x_max.max(p.x);
            r.y_min = r.y_min.min(p.y);
            r.y_max = r.y_max.max(p.y);
        }
        Some(r)
    }

    /// Screen rectangle with the corner order `{(0,H), (W,H), (W,0), (0,0)}`.
    pub fn screen(w: f64, h: f64) -> Self {
        Self::from_xy(&[(0.0, h), (w, h), (w, 0.0), (0.0, 0.0)])
    }

    pub fn edges(&self) -> impl Iterator<Item = (ScreenPoint, ScreenPoint)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Axis-aligned rectangle in pixels. Emptiness is expressed as `Option<Rect>`
/// by the operations that can produce it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl TryFrom<[f64; 4]> for Rect {
    type Error = String;
    fn try_from(v: [f64; 4]) -> Result<Self, String> {
        Rect::new(v[0], v[1], v[2], v[3]).ok_or_else(|| format!("invalid rectangle {v:?}"))
    }
}

impl From<Rect> for [f64; 4] {
    fn from(r: Rect) -> Self {
        [r.x_min, r.y_min, r.x_max, r.y_max]
    }
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Option<Rect> {
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        (finite && x_min <= x_max && y_min <= y_max).then_some(Rect { x_min, y_min, x_max, y_max })
    }

    pub fn full_screen(w: f64, h: f64) -> Rect {
        Rect { x_min: 0.0, y_min: 0.0, x_max: w, y_max: h }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> ScreenPoint {
        ScreenPoint::new((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    /// Corners in the order top-left, top-right, bottom-right, bottom-left.
    pub fn corners(&self) -> [ScreenPoint; 4] {
        [
            ScreenPoint::new(self.x_min, self.y_min),
            ScreenPoint::new(self.x_max, self.y_min),
            ScreenPoint::new(self.x_max, self.y_max),
            ScreenPoint::new(self.x_min, self.y_max),
        ]
    }

    pub fn contains_point(&self, p: ScreenPoint) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Whether `other` lies inside `self`, allowing `tol` px of slack.
    pub fn contains_rect(&self, other: &Rect, tol: f64) -> bool {
        other.x_min >= self.x_min - tol
            && other.y_min >= self.y_min - tol
            && other.x_max <= self.x_max + tol
            && other.y_max <= self.y_max + tol
    }

    pub fn to_polygon(&self) -> ScreenPolygon {
        ScreenPolygon::new(self.corners().to_vec())
    }
}

pub fn rect_area(r: &Rect) -> f64 {
    r.width() * r.height()
}

/// Overlap of two rectangles; `None` when they share no interior.
pub fn rect_intersect(a: &Rect, b: &Rect) -> Option<Rect> {
    let x_min = a.x_min.max(b.x_min);
    let y_min = a.y_min.max(b.y_min);
    let x_max = a.x_max.min(b.x_max);
    let y_max = a.y_max.min(b.y_max);
    (x_min < x_max && y_min < y_max).then_some(Rect { x_min, y_min, x_max, y_max })
}

/// Intersection-over-union of two rectangles.
pub fn rect_iou(a: &Rect, b: &Rect) -> f64 {
    let inter = rect_intersect(a, b).map_or(0.0, |r| rect_area(&r));
    let union = rect_area(a) + rect_area(b) - inter;
    if union <= 0.0 {
        if a == b {
            1.0
        } else {
            0.0
        }
    } else {
        inter / union
    }
}

/// Shoelace sum; positive for counter-clockwise order in a y-up frame.
pub fn signed_area(points: &[ScreenPoint]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    twice / 2.0
}

pub fn polygon_area(poly: &ScreenPolygon) -> f64 {
    signed_area(&poly.vertices).abs()
}

fn distance_to_segment(p: ScreenPoint, a: ScreenPoint, b: ScreenPoint) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let s = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(ScreenPoint::new(a.x + s * dx, a.y + s * dy))
}

/// Ray-casting containment test. Points on the boundary (within
/// [`tolerance::CONTAINMENT_PX`]) count as inside.
pub fn point_in_polygon(p: ScreenPoint, poly: &ScreenPolygon) -> bool {
    if poly.is_empty() {
        return false;
    }
    if poly.edges().any(|(a, b)| distance_to_segment(p, a, b) <= tolerance::CONTAINMENT_PX) {
        return true;
    }
    let mut inside = false;
    for (a, b) in poly.edges() {
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Convexity with either winding; collinear runs are tolerated.
pub fn is_convex(points: &[ScreenPoint]) -> bool {
    let n = points.len();
    if n < 3 {
        return false;
    }
    let area = signed_area(points);
    if area.abs() <= tolerance::SLIVER_AREA_PX2 {
        return false;
    }
    let orient = area.signum();
    let scale = points.iter().fold(1.0_f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
    let eps = 1e-9 * scale * scale;
    let mut turning = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let c = points[(i + 2) % n];
        if cross(a, b, c) * orient < -eps {
            return false;
        }
        let h1 = (b.y - a.y).atan2(b.x - a.x);
        let h2 = (c.y - b.y).atan2(c.x - b.x);
        let mut d = h2 - h1;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        turning += d;
    }
    // Rules out star polygons, which turn consistently but wind more than once.
    (turning.abs() - 2.0 * std::f64::consts::PI).abs() < 1e-6
}

fn segments_intersect(p1: ScreenPoint, p2: ScreenPoint, q1: ScreenPoint, q2: ScreenPoint) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: ScreenPoint, b: ScreenPoint, p: ScreenPoint, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// True when the closed polyline has no repeated vertices, no crossing or
/// touching non-adjacent edges, and non-zero area.
pub fn is_simple(points: &[ScreenPoint]) -> bool {
    let n = points.len();
    if n < 3 || signed_area(points).abs() <= tolerance::SLIVER_AREA_PX2 {
        return false;
    }
    for i in 0..n {
        if points[i] == points[(i + 1) % n] {
            return false;
        }
    }
    for i in 0..n {
        let (a1, a2) = (points[i], points[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (b1, b2) = (points[j], points[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// Result of pushing one local-space vertex through the model-view-projection chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    OnScreenPlane(ScreenPoint),
    BehindCamera,
}

/// Projects a plane-local homogeneous vertex to screen pixels via `P · V · T · v`,
/// perspective division, and the y-flip from NDC to a top-left origin.
pub fn project_vertex(
    v_local: [f64; 4],
    pose: &Mat4,
    view: &Mat4,
    projection: &Mat4,
    w: f64,
    h: f64,
) -> Result<Projection, GeometryError> {
    if !(w > 0.0 && h > 0.0) {
        return Err(GeometryError::BadScreen(w, h));
    }
    let world = pose.mul_vec4(v_local);
    let eye = view.mul_vec4(world);
    let clip = projection.mul_vec4(eye);
    if !clip.iter().all(|c| c.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    if clip[3] <= tolerance::BEHIND_CAMERA_W {
        return Ok(Projection::BehindCamera);
    }
    let x_ndc = clip[0] / clip[3];
    let y_ndc = clip[1] / clip[3];
    let x = (x_ndc + 1.0) / 2.0 * w;
    let y = (1.0 - (y_ndc + 1.0) / 2.0) * h;
    if !(x.is_finite() && y.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    Ok(Projection::OnScreenPlane(ScreenPoint::new(x, y)))
}
