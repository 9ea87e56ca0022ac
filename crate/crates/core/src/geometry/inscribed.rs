//! Conservative inscribed rectangles ("visible boxes").

use super::{point_in_polygon, tolerance, GeometryError, Rect, ScreenPolygon};

/// Shrinks the polygon's screen-clamped bounding box until all four corners
/// lie inside the polygon.
///
/// Each pass moves every side whose two corners are not both inside inward by
/// [`tolerance::SHRINK_STEP`] of the current extent on that axis. Returns
/// `Ok(None)` once the box degenerates to [`tolerance::MIN_EXTENT_PX`] or after
/// [`tolerance::MAX_SHRINK_ITERATIONS`] passes.
pub fn inscribed_rect(poly: &ScreenPolygon, w: f64, h: f64) -> Result<Option<Rect>, GeometryError> {
    Ok(inscribed_rect_traced(poly, w, h)?.0)
}

/// Like [`inscribed_rect`], also reporting how many shrink passes ran.
pub fn inscribed_rect_traced(
    poly: &ScreenPolygon,
    w: f64,
    h: f64,
) -> Result<(Option<Rect>, usize), GeometryError> {
    if poly.len() < 3 {
        return Err(GeometryError::TooFewVertices(poly.len()));
    }
    if !(w > 0.0 && h > 0.0) {
        return Err(GeometryError::BadScreen(w, h));
    }
    let raw = poly.bounds().expect("non-empty polygon has bounds");
    let mut x_min = raw.x_min.max(0.0);
    let mut x_max = raw.x_max.min(w);
    let mut y_min = raw.y_min.max(0.0);
    let mut y_max = raw.y_max.min(h);

    let inside = |x: f64, y: f64| point_in_polygon(super::ScreenPoint::new(x, y), poly);
    let degenerate =
        |x0: f64, x1: f64, y0: f64, y1: f64| x1 - x0 <= tolerance::MIN_EXTENT_PX || y1 - y0 <= tolerance::MIN_EXTENT_PX;

    let mut passes = 0;
    loop {
        if degenerate(x_min, x_max, y_min, y_max) {
            return Ok((None, passes));
        }
        let tl = inside(x_min, y_min);
        let tr = inside(x_max, y_min);
        let br = inside(x_max, y_max);
        let bl = inside(x_min, y_max);
        if tl && tr && br && bl {
            return Ok((Rect::new(x_min, y_min, x_max, y_max), passes));
        }
        if passes == tolerance::MAX_SHRINK_ITERATIONS {
            return Ok((None, passes));
        }
        passes += 1;

        let dx = x_max - x_min;
        let dy = y_max - y_min;
        if !(tl && bl) {
            x_min = (x_min + tolerance::SHRINK_STEP * dx).max(0.0);
        }
        if !(tr && br) {
            x_max = (x_max - tolerance::SHRINK_STEP * dx).min(w);
        }
        if !(tl && tr) {
            y_min = (y_min + tolerance::SHRINK_STEP * dy).max(0.0);
        }
        if !(bl && br) {
            y_max = (y_max - tolerance::SHRINK_STEP * dy).min(h);
        }
    }
}
