//! Sutherland-Hodgman clipping against convex polygons and half-planes.

use super::{cross, is_convex, signed_area, tolerance, GeometryError, ScreenPoint, ScreenPolygon};

/// Parameter `t` along `p1 -> p2` where it meets the line through `p3 -> p4`.
///
/// Returns `None` when the lines are parallel.
pub fn line_param_t(p1: ScreenPoint, p2: ScreenPoint, p3: ScreenPoint, p4: ScreenPoint) -> Option<f64> {
    let num = (p1.x - p3.x) * (p3.y - p4.y) - (p1.y - p3.y) * (p3.x - p4.x);
    let den = (p1.x - p2.x) * (p3.y - p4.y) - (p1.y - p2.y) * (p3.x - p4.x);
    if den.abs() < tolerance::PARALLEL {
        None
    } else {
        Some(num / den)
    }
}

/// Which side of a directed clip edge to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Keep {
    Inside,
    Outside,
}

/// One Sutherland-Hodgman pass against the line `a -> b`.
///
/// `orient` is the sign of the clip polygon's signed area, so "inside" is the
/// interior side regardless of winding. Boundary points belong to both sides.
pub(crate) fn clip_against_edge(
    input: &[ScreenPoint],
    a: ScreenPoint,
    b: ScreenPoint,
    orient: f64,
    keep: Keep,
) -> Vec<ScreenPoint> {
    let n = input.len();
    let mut out = Vec::with_capacity(n + 2);
    if n == 0 {
        return out;
    }
    let kept = |p: ScreenPoint| {
        let d = cross(a, b, p) * orient;
        match keep {
            Keep::Inside => d >= 0.0,
            Keep::Outside => d <= 0.0,
        }
    };
    for i in 0..n {
        let cur = input[i];
        let next = input[(i + 1) % n];
        let cur_in = kept(cur);
        let next_in = kept(next);
        if cur_in {
            out.push(cur);
        }
        if cur_in != next_in {
            if let Some(t) = line_param_t(cur, next, a, b) {
                out.push(cur.lerp(next, t.clamp(0.0, 1.0)));
            }
        }
    }
    out
}

/// Drops repeated vertices and reports an empty polygon for slivers.
pub(crate) fn tidy(mut pts: Vec<ScreenPoint>) -> ScreenPolygon {
    pts.dedup_by(|a, b| a.distance(*b) <= 1e-9);
    while pts.len() > 1 && pts[0].distance(pts[pts.len() - 1]) <= 1e-9 {
        pts.pop();
    }
    if pts.len() < 3 || signed_area(&pts).abs() <= tolerance::SLIVER_AREA_PX2 {
        return ScreenPolygon::empty();
    }
    ScreenPolygon::new(pts)
}

/// Clips `subject` to the convex polygon `clip` (either winding).
pub fn clip_polygon(subject: &ScreenPolygon, clip: &ScreenPolygon) -> Result<ScreenPolygon, GeometryError> {
    if !is_convex(&clip.vertices) {
        return Err(GeometryError::NonConvexClip);
    }
    Ok(clip_convex_unchecked(&subject.vertices, clip))
}

pub(crate) fn clip_convex_unchecked(subject: &[ScreenPoint], clip: &ScreenPolygon) -> ScreenPolygon {
    let orient = signed_area(&clip.vertices).signum();
    let mut current = subject.to_vec();
    for (a, b) in clip.edges() {
        if current.is_empty() {
            break;
        }
        current = clip_against_edge(&current, a, b, orient, Keep::Inside);
    }
    tidy(current)
}

/// Clips to the `W x H` screen rectangle.
pub fn screen_clip_polygon(subject: &ScreenPolygon, w: f64, h: f64) -> ScreenPolygon {
    clip_convex_unchecked(&subject.vertices, &ScreenPolygon::screen(w, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polygon_area;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(x0: f64, y0: f64, side: f64) -> ScreenPolygon {
        ScreenPolygon::from_xy(&[(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)])
    }

    #[test]
    fn perpendicular_bisection() {
        let t = line_param_t(
            ScreenPoint::new(0.0, 0.0),
            ScreenPoint::new(2.0, 0.0),
            ScreenPoint::new(1.0, -1.0),
            ScreenPoint::new(1.0, 1.0),
        );
        assert_eq!(t, Some(0.5));
    }

    #[test]
    fn parallel_segments_flagged() {
        let t = line_param_t(
            ScreenPoint::new(0.0, 0.0),
            ScreenPoint::new(2.0, 0.0),
            ScreenPoint::new(0.0, 1.0),
            ScreenPoint::new(5.0, 1.0),
        );
        assert_eq!(t, None);
    }

    #[test]
    fn line_param_matches_linear_solve() {
        // Oracle: solve p1 + t (p2 - p1) = p3 + s (p4 - p3) by Cramer's rule.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 1000 {
            let mut pt = || ScreenPoint::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
            let (p1, p2, p3, p4) = (pt(), pt(), pt(), pt());
            let (a11, a12) = (p2.x - p1.x, -(p4.x - p3.x));
            let (a21, a22) = (p2.y - p1.y, -(p4.y - p3.y));
            let (b1, b2) = (p3.x - p1.x, p3.y - p1.y);
            let det = a11 * a22 - a12 * a21;
            if det.abs() < 1e-3 {
                continue;
            }
            let t_oracle = (b1 * a22 - a12 * b2) / det;
            let t = line_param_t(p1, p2, p3, p4).unwrap();
            assert!((t - t_oracle).abs() <= 1e-9 * t_oracle.abs().max(1.0), "{t} vs {t_oracle}");
            checked += 1;
        }
    }

    #[test]
    fn inside_subject_is_unchanged() {
        let screen = ScreenPolygon::screen(100.0, 100.0);
        let s = square(10.0, 10.0, 20.0);
        let out = clip_polygon(&s, &screen).unwrap();
        assert!((polygon_area(&out) - 400.0).abs() <= 1e-6 * 400.0);
    }

    #[test]
    fn outside_subject_vanishes() {
        let screen = ScreenPolygon::screen(100.0, 100.0);
        let out = clip_polygon(&square(200.0, 200.0, 20.0), &screen).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn straddling_square_keeps_half() {
        // Monte-Carlo oracle: sample the subject's bounds and count points in the clip.
        let clip = ScreenPolygon::screen(10.0, 10.0);
        let subject = square(9.5, 4.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = 1_000_000;
        let inside = (0..samples)
            .filter(|_| rng.random_range(9.5..10.5) <= 10.0 && rng.random_range(4.0..5.0) >= 0.0)
            .count();
        let oracle = inside as f64 / samples as f64;
        assert!((oracle - 0.5).abs() < 0.005);
        let out = clip_polygon(&subject, &clip).unwrap();
        assert!((polygon_area(&out) - 0.5).abs() <= 1e-6 * 0.5);
    }

    #[test]
    fn non_convex_clip_is_rejected() {
        let l_shape = ScreenPolygon::from_xy(&[
            (0.0, 0.0),
            (2.0, 0.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 2.0),
            (0.0, 2.0),
        ]);
        assert_eq!(clip_polygon(&square(0.0, 0.0, 1.0), &l_shape), Err(GeometryError::NonConvexClip));
    }

    #[test]
    fn either_winding_of_clip_works() {
        let s = square(-5.0, -5.0, 10.0);
        let cw = ScreenPolygon::screen(4.0, 4.0);
        let mut ccw = cw.clone();
        ccw.vertices.reverse();
        let a = polygon_area(&clip_polygon(&s, &cw).unwrap());
        let b = polygon_area(&clip_polygon(&s, &ccw).unwrap());
        assert!((a - 16.0).abs() < 1e-9 && (b - 16.0).abs() < 1e-9);
    }
}
