//! Per-frame visibility analysis: trackable filtering, projection, screen and
//! occlusion clipping, and reduction to one visible box per trackable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    inscribed_rect, project_vertex, tolerance, rect_area, screen_clip_polygon, subtract_occluders, Projection, Rect,
    ScreenPolygon,
};
use crate::math::Vec3;
use crate::trace::{FrameRecord, PlaybackTrace, TrackableSnapshot, TrackingState};

/// Minimum box-to-screen area ratio for a box to be kept.
pub const DEFAULT_MIN_VISIBILITY: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleBox {
    pub trackable_id: String,
    pub frame_index: usize,
    #[serde(rename = "box")]
    pub rect: Rect,
    pub visibility_ratio: f64,
    pub camera_distance: f64,
}

/// Visible part of one trackable on one frame, before box reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibleRegion {
    pub trackable_id: String,
    pub camera_distance: f64,
    /// Projection clipped to the screen, before occlusion.
    pub screen_polygon: ScreenPolygon,
    /// Convex pieces left after removing nearer trackables.
    pub pieces: Vec<ScreenPolygon>,
}

/// A trackable can only be interacted with from its front side: rejects
/// `n · (c − p) <= 0`, edge-on included.
pub fn facing_camera(t: &TrackableSnapshot, cam_pos: Vec3) -> bool {
    t.normal_world.dot(cam_pos - t.center_world) > 0.0
}

/// Projects the trackable polygon; `None` if any vertex is behind the camera.
pub fn project_trackable(t: &TrackableSnapshot, frame: &FrameRecord) -> Option<ScreenPolygon> {
    let (w, h) = (frame.screen.w as f64, frame.screen.h as f64);
    let mut vertices = Vec::with_capacity(t.local_vertices.len());
    for &[x, z] in &t.local_vertices {
        match project_vertex([x, 0.0, z, 1.0], &t.pose, &frame.view, &frame.projection, w, h) {
            Ok(Projection::OnScreenPlane(p)) => vertices.push(p),
            Ok(Projection::BehindCamera) | Err(_) => return None,
        }
    }
    Some(ScreenPolygon::new(vertices))
}

struct Candidate<'a> {
    snapshot: &'a TrackableSnapshot,
    distance: f64,
    polygon: ScreenPolygon,
    facing: bool,
}

/// Visible regions of every tracked, camera-facing trackable on a frame.
///
/// Trackables are processed from the closest to the farthest; each one loses
/// the projections of all strictly nearer tracked trackables.
pub fn visible_regions(frame: &FrameRecord) -> Vec<VisibleRegion> {
    let (w, h) = (frame.screen.w as f64, frame.screen.h as f64);
    let mut candidates: Vec<Candidate> = frame
        .trackables
        .iter()
        .filter(|t| t.tracking_state == TrackingState::Tracking)
        .filter_map(|t| {
            let polygon = screen_clip_polygon(&project_trackable(t, frame)?, w, h);
            Some(Candidate {
                snapshot: t,
                distance: (frame.camera_position - t.center_world).length(),
                polygon,
                facing: facing_camera(t, frame.camera_position),
            })
        })
        .collect();
    candidates.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.snapshot.trackable_id.cmp(&b.snapshot.trackable_id))
    });

    let mut regions = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        if !c.facing || c.polygon.is_empty() {
            continue;
        }
        let occluders: Vec<ScreenPolygon> = candidates[..i]
            .iter()
            .filter(|o| o.distance < c.distance && !o.polygon.is_empty())
            .map(|o| o.polygon.clone())
            .collect();
        let pieces = subtract_occluders(&c.polygon, &occluders);
        regions.push(VisibleRegion {
            trackable_id: c.snapshot.trackable_id.clone(),
            camera_distance: c.distance,
            screen_polygon: c.polygon.clone(),
            pieces,
        });
    }
    regions
}

/// Largest inscribed box over the region's pieces, pulled in by
/// [`tolerance::BOX_INSET_PX`] on every side.
pub fn region_box(region: &VisibleRegion, w: f64, h: f64) -> Option<Rect> {
    let best = region
        .pieces
        .iter()
        .filter_map(|p| inscribed_rect(p, w, h).ok().flatten())
        .fold(None, |best: Option<Rect>, r| match best {
            Some(b) if rect_area(&b) >= rect_area(&r) => Some(b),
            _ => Some(r),
        })?;
    let m = tolerance::BOX_INSET_PX;
    Some(Rect { x_min: best.x_min + m, y_min: best.y_min + m, x_max: best.x_max - m, y_max: best.y_max - m })
}

/// Visible boxes for one frame: at most one per trackable, each covering at
/// least `min_visibility` of the screen.
pub fn analyze_frame(frame: &FrameRecord, frame_index: usize, min_visibility: f64) -> Vec<VisibleBox> {
    let (w, h) = (frame.screen.w as f64, frame.screen.h as f64);
    let screen_area = w * h;
    visible_regions(frame)
        .into_iter()
        .filter_map(|region| {
            let rect = region_box(&region, w, h)?;
            let ratio = rect_area(&rect) / screen_area;
            (ratio >= min_visibility).then_some(VisibleBox {
                trackable_id: region.trackable_id,
                frame_index,
                rect,
                visibility_ratio: ratio,
                camera_distance: region.camera_distance,
            })
        })
        .collect()
}

/// Runs [`analyze_frame`] over every frame of a trace in parallel.
pub fn analyze_trace(trace: &PlaybackTrace, min_visibility: f64) -> Vec<Vec<VisibleBox>> {
    trace
        .frames
        .par_iter()
        .enumerate()
        .map(|(i, f)| analyze_frame(f, i, min_visibility))
        .collect()
}
