//! Occlusion removal: subtracting nearer projections and splitting the
//! remainder into convex pieces.

use super::clip::{clip_against_edge, tidy, Keep};
use super::{cross, is_convex, signed_area, tolerance, Rect, ScreenPoint, ScreenPolygon};

/// Splits a simple polygon into interior-disjoint convex pieces.
///
/// Convex input comes back as a single piece. Concave input is ear-clipped and
/// adjacent triangles are greedily merged while the union stays convex.
pub fn convex_decompose(poly: &ScreenPolygon) -> Vec<ScreenPolygon> {
    let tidy_poly = tidy(poly.vertices.clone());
    if tidy_poly.is_empty() {
        return Vec::new();
    }
    if is_convex(&tidy_poly.vertices) {
        return vec![tidy_poly];
    }
    let mut pts = tidy_poly.vertices;
    if signed_area(&pts) < 0.0 {
        pts.reverse();
    }
    let triangles = ear_clip(&pts);
    merge_convex(triangles)
}

/// Ear clipping for a counter-clockwise (positive area) simple polygon.
fn ear_clip(pts: &[ScreenPoint]) -> Vec<Vec<ScreenPoint>> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let mut out = Vec::new();
    let mut guard = 0;
    while idx.len() > 3 && guard < pts.len() * pts.len() {
        guard += 1;
        let n = idx.len();
        let mut clipped = false;
        for i in 0..n {
            let (ia, ib, ic) = (idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]);
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            let turn = cross(a, b, c);
            if turn <= 0.0 {
                if turn == 0.0 {
                    // Collinear vertex: drop it without emitting a triangle.
                    idx.remove(i);
                    clipped = true;
                    break;
                }
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = pts[j];
                cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
            });
            if !blocked {
                out.push(vec![a, b, c]);
                idx.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            break;
        }
    }
    if idx.len() == 3 {
        let tri: Vec<_> = idx.iter().map(|&j| pts[j]).collect();
        if signed_area(&tri) > tolerance::SLIVER_AREA_PX2 {
            out.push(tri);
        }
    }
    out
}

/// Index of the directed edge `from -> to` in `poly`, if present.
fn find_edge(poly: &[ScreenPoint], from: ScreenPoint, to: ScreenPoint) -> Option<usize> {
    let n = poly.len();
    (0..n).find(|&i| poly[i] == from && poly[(i + 1) % n] == to)
}

/// Union of two counter-clockwise polygons sharing the edge `u -> v` in `a`
/// (and `v -> u` in `b`).
fn join(a: &[ScreenPoint], ia: usize, b: &[ScreenPoint], ib: usize) -> Vec<ScreenPoint> {
    let (na, nb) = (a.len(), b.len());
    let mut out = Vec::with_capacity(na + nb - 2);
    // Walk `a` from v round to u, then `b` strictly between u and v.
    for k in 0..na {
        out.push(a[(ia + 1 + k) % na]);
    }
    for k in 0..nb.saturating_sub(2) {
        out.push(b[(ib + 2 + k) % nb]);
    }
    out
}

fn merge_convex(mut pieces: Vec<Vec<ScreenPoint>>) -> Vec<ScreenPolygon> {
    let mut merged = true;
    while merged {
        merged = false;
        'search: for i in 0..pieces.len() {
            for j in (i + 1)..pieces.len() {
                let n = pieces[i].len();
                for e in 0..n {
                    let (u, v) = (pieces[i][e], pieces[i][(e + 1) % n]);
                    if let Some(f) = find_edge(&pieces[j], v, u) {
                        let candidate = join(&pieces[i], e, &pieces[j], f);
                        if is_convex(&candidate) {
                            pieces[i] = candidate;
                            pieces.swap_remove(j);
                            merged = true;
                            break 'search;
                        }
                    }
                }
            }
        }
    }
    pieces.into_iter().map(tidy).filter(|p| !p.is_empty()).collect()
}

fn bounds_overlap(a: &Option<Rect>, b: &Option<Rect>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => {
            a.x_min <= b.x_max && b.x_min <= a.x_max && a.y_min <= b.y_max && b.y_min <= a.y_max
        }
        _ => false,
    }
}

/// `piece \ occluder` for two convex polygons, as disjoint convex pieces.
///
/// Walks the occluder's edges: the part of the remainder outside edge `i` is
/// emitted, the part inside carries on to edge `i + 1`. What survives every
/// edge lies inside the occluder and is discarded.
fn subtract_convex(piece: &ScreenPolygon, occluder: &ScreenPolygon) -> Vec<ScreenPolygon> {
    if !bounds_overlap(&piece.bounds(), &occluder.bounds()) {
        return vec![piece.clone()];
    }
    let orient = signed_area(&occluder.vertices).signum();
    let mut remainder = piece.vertices.clone();
    let mut out = Vec::new();
    for (a, b) in occluder.edges() {
        let outside = tidy(clip_against_edge(&remainder, a, b, orient, Keep::Outside));
        if !outside.is_empty() {
            out.push(outside);
        }
        remainder = tidy(clip_against_edge(&remainder, a, b, orient, Keep::Inside)).vertices;
        if remainder.is_empty() {
            break;
        }
    }
    out
}

/// Removes the union of `occluders` from `subject`, in the order given.
///
/// Returns convex, pairwise interior-disjoint pieces covering the visible
/// remainder. An unobstructed convex subject comes back as one piece.
pub fn subtract_occluders(subject: &ScreenPolygon, occluders: &[ScreenPolygon]) -> Vec<ScreenPolygon> {
    let mut pieces = convex_decompose(subject);
    for occluder in occluders {
        for occ_piece in convex_decompose(occluder) {
            pieces = pieces.iter().flat_map(|p| subtract_convex(p, &occ_piece)).collect();
            if pieces.is_empty() {
                return pieces;
            }
        }
    }
    pieces
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{point_in_polygon, polygon_area};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> ScreenPolygon {
        ScreenPolygon::from_xy(&[(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    }

    fn total_area(pieces: &[ScreenPolygon]) -> f64 {
        pieces.iter().map(polygon_area).sum()
    }

    #[test]
    fn no_occluders_returns_subject() {
        let s = rect(0.0, 0.0, 10.0, 10.0);
        let pieces = subtract_occluders(&s, &[]);
        assert_eq!(pieces.len(), 1);
        assert_eq!(polygon_area(&pieces[0]), 100.0);
    }

    #[test]
    fn full_cover_removes_everything() {
        let s = rect(2.0, 2.0, 8.0, 8.0);
        assert!(subtract_occluders(&s, &[rect(0.0, 0.0, 10.0, 10.0)]).is_empty());
    }

    #[test]
    fn square_minus_centered_square() {
        let big = rect(0.0, 0.0, 100.0, 100.0);
        let small = rect(30.0, 30.0, 70.0, 70.0);
        let pieces = subtract_occluders(&big, std::slice::from_ref(&small));
        // Monte-Carlo oracle over the big square.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400_000;
        let hits = (0..n)
            .filter(|_| {
                let p = ScreenPoint::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
                !point_in_polygon(p, &small)
            })
            .count();
        let oracle = hits as f64 / n as f64 * 10_000.0;
        assert!((oracle - 8400.0).abs() / 8400.0 < 0.01);
        let area = total_area(&pieces);
        assert!((area - 8400.0).abs() / 8400.0 < 1e-4, "area {area}");
        assert!(pieces.iter().all(|p| is_convex(&p.vertices)));
    }

    #[test]
    fn concave_polygon_decomposes_into_convex_pieces() {
        let l_shape = ScreenPolygon::from_xy(&[
            (0.0, 0.0),
            (20.0, 0.0),
            (20.0, 10.0),
            (10.0, 10.0),
            (10.0, 20.0),
            (0.0, 20.0),
        ]);
        let pieces = convex_decompose(&l_shape);
        assert!(pieces.len() >= 2);
        assert!(pieces.iter().all(|p| is_convex(&p.vertices)));
        assert!((total_area(&pieces) - 300.0).abs() < 1e-9);
    }

    #[test]
    fn occluder_order_does_not_change_area() {
        let s = rect(0.0, 0.0, 50.0, 50.0);
        let a = rect(-10.0, -10.0, 20.0, 20.0);
        let b = rect(10.0, 10.0, 40.0, 60.0);
        let ab = total_area(&subtract_occluders(&s, &[a.clone(), b.clone()]));
        let ba = total_area(&subtract_occluders(&s, &[b, a]));
        assert!((ab - ba).abs() < 1e-6);
        assert!((ab - (2500.0 - 400.0 - 1200.0 + 100.0)).abs() < 1e-6);
    }
}
