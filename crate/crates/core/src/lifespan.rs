//! Life span analysis: chaining per-frame visible boxes into stable boxes,
//! filtering by duration, and intersecting repeated analysis runs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::{rect_area, rect_intersect, Rect};
use crate::trace::Screen;
use crate::visibility::VisibleBox;

/// Shortest life span, in seconds, that still allows two consecutive gestures.
pub const DEFAULT_MIN_LIFESPAN_S: f64 = 2.0;

/// A run of consecutive frames over which a trackable's running box
/// intersection stayed large enough.
#[derive(Debug, Clone, PartialEq)]
pub struct LifeSpan {
    pub stable_box: Rect,
    pub frames: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOpportunity {
    #[serde(rename = "id")]
    pub trackable_id: String,
    #[serde(rename = "box")]
    pub stable_box: Rect,
    pub start_ms: i64,
    pub end_ms: i64,
    /// Sampled-frame indices of the life span.
    #[serde(rename = "frames")]
    pub frame_indices: Vec<usize>,
}

impl TestOpportunity {
    pub fn duration_ms(&self) -> i64 {
        self.end_ms - self.start_ms
    }

    pub fn is_active_at(&self, t_ms: i64) -> bool {
        self.start_ms <= t_ms && t_ms <= self.end_ms
    }
}

fn ratio(r: &Rect, screen: Screen) -> f64 {
    rect_area(r) / screen.area()
}

/// Walks the frames of one trackable (`boxes[i]` is its box on frame `i`, if
/// any) and returns every life span.
///
/// The stable box starts as the full screen and is intersected with each
/// frame's box. A span closes when the next frame has no box or when the
/// intersection would fall below `min_visibility`; scanning then restarts at
/// that frame with a fresh full-screen stable box.
pub fn life_spans(boxes: &[Option<Rect>], screen: Screen, min_visibility: f64) -> Vec<LifeSpan> {
    let full = Rect::full_screen(screen.w as f64, screen.h as f64);
    let mut spans = Vec::new();
    let mut open: Option<LifeSpan> = None;

    for (frame, slot) in boxes.iter().enumerate() {
        let Some(b) = slot else {
            spans.extend(open.take());
            continue;
        };
        if let Some(span) = open.as_mut() {
            match rect_intersect(&span.stable_box, b).filter(|r| ratio(r, screen) >= min_visibility) {
                Some(next) => {
                    span.stable_box = next;
                    span.frames.push(frame);
                    continue;
                }
                None => spans.extend(open.take()),
            }
        }
        if let Some(fresh) = rect_intersect(&full, b).filter(|r| ratio(r, screen) >= min_visibility) {
            open = Some(LifeSpan { stable_box: fresh, frames: vec![frame] });
        }
    }
    spans.extend(open);
    spans
}

/// Turns spans into opportunities, keeping those lasting at least
/// `min_lifespan_s` (inclusive). Durations come from frame timestamps.
pub fn filter_by_duration(
    trackable_id: &str,
    spans: &[LifeSpan],
    timestamps_ms: &[i64],
    min_lifespan_s: f64,
) -> Vec<TestOpportunity> {
    let min_ms = min_lifespan_s * 1000.0;
    spans
        .iter()
        .filter_map(|span| {
            let start_ms = timestamps_ms[*span.frames.first()?];
            let end_ms = timestamps_ms[*span.frames.last()?];
            ((end_ms - start_ms) as f64 >= min_ms).then(|| TestOpportunity {
                trackable_id: trackable_id.to_owned(),
                stable_box: span.stable_box,
                start_ms,
                end_ms,
                frame_indices: span.frames.clone(),
            })
        })
        .collect()
}

/// Regroups per-frame boxes into one dense per-frame column per trackable.
pub fn boxes_by_trackable(frames: &[Vec<VisibleBox>]) -> BTreeMap<String, Vec<Option<Rect>>> {
    let mut out: BTreeMap<String, Vec<Option<Rect>>> = BTreeMap::new();
    for (i, boxes) in frames.iter().enumerate() {
        for b in boxes {
            out.entry(b.trackable_id.clone()).or_insert_with(|| vec![None; frames.len()])[i] = Some(b.rect);
        }
    }
    out
}

/// Canonical ordering: by start time, then trackable id.
pub fn sort_opportunities(opps: &mut [TestOpportunity]) {
    opps.sort_by(|a, b| {
        a.start_ms
            .cmp(&b.start_ms)
            .then_with(|| a.trackable_id.cmp(&b.trackable_id))
            .then_with(|| a.end_ms.cmp(&b.end_ms))
    });
}

/// Full per-run analysis from per-frame boxes to sorted opportunities.
pub fn opportunities_from_boxes(
    frames: &[Vec<VisibleBox>],
    timestamps_ms: &[i64],
    screen: Screen,
    min_visibility: f64,
    min_lifespan_s: f64,
) -> Vec<TestOpportunity> {
    let mut opps: Vec<TestOpportunity> = boxes_by_trackable(frames)
        .iter()
        .flat_map(|(id, column)| {
            let spans = life_spans(column, screen, min_visibility);
            filter_by_duration(id, &spans, timestamps_ms, min_lifespan_s)
        })
        .collect();
    sort_opportunities(&mut opps);
    opps
}

/// Intersection of two opportunities of the same trackable, if they overlap
/// in time and space.
pub fn intersect_pair(a: &TestOpportunity, b: &TestOpportunity) -> Option<TestOpportunity> {
    if a.trackable_id != b.trackable_id {
        return None;
    }
    let start_ms = a.start_ms.max(b.start_ms);
    let end_ms = a.end_ms.min(b.end_ms);
    if end_ms < start_ms {
        return None;
    }
    let stable_box = rect_intersect(&a.stable_box, &b.stable_box)?;
    let theirs: BTreeSet<usize> = b.frame_indices.iter().copied().collect();
    let frame_indices = a.frame_indices.iter().copied().filter(|f| theirs.contains(f)).collect();
    Some(TestOpportunity { trackable_id: a.trackable_id.clone(), stable_box, start_ms, end_ms, frame_indices })
}

/// Cross-run tuples: every combination of one opportunity per run that shares
/// a trackable and overlaps in time and space, folded into its intersection.
pub fn cross_run_overlaps(runs: &[Vec<TestOpportunity>]) -> Vec<TestOpportunity> {
    let Some((first, rest)) = runs.split_first() else {
        return Vec::new();
    };
    let mut current = first.clone();
    for run in rest {
        current = current
            .iter()
            .flat_map(|a| run.iter().filter_map(move |b| intersect_pair(a, b)))
            .collect();
    }
    sort_opportunities(&mut current);
    current
}

/// Keeps only opportunities present in every run: matched by trackable id,
/// with boxes and intervals intersected and both thresholds re-applied.
pub fn intersect_runs(
    runs: &[Vec<TestOpportunity>],
    screen: Screen,
    min_visibility: f64,
    min_lifespan_s: f64,
) -> Vec<TestOpportunity> {
    cross_run_overlaps(runs)
        .into_iter()
        .filter(|o| {
            ratio(&o.stable_box, screen) >= min_visibility && o.duration_ms() as f64 >= min_lifespan_s * 1000.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SCREEN: Screen = Screen::new(1000, 1000);

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Rect {
        Rect::new(x0, y0, x1, y1).unwrap()
    }

    /// Square centered on the screen with the given screen-area ratio.
    fn centered(ratio: f64) -> Rect {
        let half = (ratio * 1e6).sqrt() / 2.0;
        rect(500.0 - half, 500.0 - half, 500.0 + half, 500.0 + half)
    }

    fn ms(n: usize, step: i64) -> Vec<i64> {
        (0..n as i64).map(|i| i * step).collect()
    }

    fn opp(id: &str, b: Rect, start: i64, end: i64) -> TestOpportunity {
        TestOpportunity {
            trackable_id: id.into(),
            stable_box: b,
            start_ms: start,
            end_ms: end,
            frame_indices: ((start / 100) as usize..=(end / 100) as usize).collect(),
        }
    }

    /// Oracle: for each start, refold the intersection from scratch for every
    /// candidate end and take the longest prefix that stays visible.
    fn brute_force(boxes: &[Option<Rect>], screen: Screen, min_vis: f64) -> Vec<LifeSpan> {
        let full = Rect::full_screen(screen.w as f64, screen.h as f64);
        let fold = |s: usize, e: usize| -> Option<Rect> {
            let mut acc = Some(full);
            for b in &boxes[s..=e] {
                acc = acc.and_then(|a| b.and_then(|b| rect_intersect(&a, &b)));
            }
            acc.filter(|r| rect_area(r) / screen.area() >= min_vis)
        };
        let mut out = Vec::new();
        let mut s = 0;
        while s < boxes.len() {
            if fold(s, s).is_none() {
                s += 1;
                continue;
            }
            let mut e = s;
            while e + 1 < boxes.len() && fold(s, e + 1).is_some() {
                e += 1;
            }
            out.push(LifeSpan { stable_box: fold(s, e).unwrap(), frames: (s..=e).collect() });
            s = e + 1;
        }
        out
    }

    #[test]
    fn constant_box_is_one_span() {
        let b = centered(0.3);
        let spans = life_spans(&vec![Some(b); 30], SCREEN, 0.10);
        assert_eq!(spans, vec![LifeSpan { stable_box: b, frames: (0..30).collect() }]);
    }

    #[test]
    fn shrinking_box_closes_below_threshold() {
        // Each frame's box is 10% (linearly) smaller than the first, anchored top-left.
        let boxes: Vec<Option<Rect>> = (0..10)
            .map(|i| {
                let r = 0.30 * (1.0 - 0.1 * i as f64);
                (r > 0.0).then(|| rect(0.0, 0.0, (r * 1e6).sqrt(), (r * 1e6).sqrt()))
            })
            .collect();
        let spans = life_spans(&boxes, SCREEN, 0.10);
        assert_eq!(spans, brute_force(&boxes, SCREEN, 0.10));
        // ratio 0.30 * (1 - 0.1 i) >= 0.10 holds for i <= 6.
        assert_eq!(spans[0].frames, (0..=6).collect::<Vec<_>>());
    }

    #[test]
    fn gap_restarts_scan() {
        let b = centered(0.3);
        let boxes: Vec<Option<Rect>> = (0..=50).map(|i| (i <= 4 || i >= 20).then_some(b)).collect();
        let spans = life_spans(&boxes, SCREEN, 0.10);
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].frames, (0..=4).collect::<Vec<_>>());
        assert_eq!(spans[1].frames, (20..=50).collect::<Vec<_>>());
    }

    #[test]
    fn duration_threshold_is_inclusive() {
        let b = centered(0.3);
        let ts = ms(40, 100);
        let half_second = LifeSpan { stable_box: b, frames: (0..=5).collect() };
        let two_seconds = LifeSpan { stable_box: b, frames: (10..=30).collect() };
        let kept = filter_by_duration("p", &[half_second, two_seconds], &ts, DEFAULT_MIN_LIFESPAN_S);
        assert_eq!(kept.len(), 1);
        assert_eq!((kept[0].start_ms, kept[0].end_ms), (1000, 3000));
    }

    #[test]
    fn identical_runs_intersect_to_themselves() {
        let run = vec![opp("a", centered(0.3), 1000, 5000), opp("b", centered(0.2), 2000, 9000)];
        let mut sorted = run.clone();
        sort_opportunities(&mut sorted);
        let out = intersect_runs(&[run.clone(), run.clone(), run], SCREEN, 0.1, 2.0);
        assert_eq!(out, sorted);
    }

    #[test]
    fn trackable_missing_from_one_run_is_dropped() {
        let a = opp("a", centered(0.3), 1000, 5000);
        let b = opp("b", centered(0.3), 1000, 5000);
        let out = intersect_runs(&[vec![a.clone(), b.clone()], vec![a.clone()], vec![a, b]], SCREEN, 0.1, 2.0);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].trackable_id, "a");
    }

    #[test]
    fn offset_boxes_intersect_exactly() {
        let base = rect(100.0, 100.0, 700.0, 600.0);
        let shifted = |dx: f64| rect(base.x_min + dx, base.y_min, base.x_max + dx, base.y_max);
        let runs = vec![
            vec![opp("a", base, 0, 4000)],
            vec![opp("a", shifted(50.0), 0, 4000)],
            vec![opp("a", shifted(-50.0), 500, 4000)],
        ];
        let out = intersect_runs(&runs, SCREEN, 0.1, 2.0);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].stable_box, rect(150.0, 100.0, 650.0, 600.0));
        assert_eq!((out[0].start_ms, out[0].end_ms), (500, 4000));
    }

    fn arb_boxes() -> impl Strategy<Value = Vec<Option<Rect>>> {
        let b = (0.0f64..400.0, 0.0f64..400.0, 300.0f64..600.0, 300.0f64..600.0)
            .prop_map(|(x, y, w, h)| Rect::new(x, y, (x + w).min(1000.0), (y + h).min(1000.0)));
        prop::collection::vec(prop::option::weighted(0.85, b.prop_map(|r| r.unwrap())), 0..60)
    }

    proptest! {
        #[test]
        fn matches_brute_force(boxes in arb_boxes(), min_vis in 0.05f64..0.3) {
            let spans = life_spans(&boxes, SCREEN, min_vis);
            prop_assert_eq!(&spans, &brute_force(&boxes, SCREEN, min_vis));
            // Spans never share frames, and each stable box sits inside its frames' boxes.
            for pair in spans.windows(2) {
                prop_assert!(pair[0].frames.last() < pair[1].frames.first());
            }
            for s in &spans {
                for &f in &s.frames {
                    prop_assert!(boxes[f].unwrap().contains_rect(&s.stable_box, 1e-6));
                }
            }
        }

        #[test]
        fn duration_filter_is_monotone(boxes in arb_boxes()) {
            let ts = ms(boxes.len(), 100);
            let spans = life_spans(&boxes, SCREEN, 0.1);
            let k1 = filter_by_duration("x", &spans, &ts, 1.0);
            let k2 = filter_by_duration("x", &spans, &ts, 2.0);
            let k3 = filter_by_duration("x", &spans, &ts, 3.0);
            prop_assert!(k3.iter().all(|o| k2.contains(o)));
            prop_assert!(k2.iter().all(|o| k1.contains(o)));
        }

        #[test]
        fn intersection_is_contained_in_every_run(
            runs in prop::collection::vec(
                prop::collection::vec((0u8..3, 0i64..50, 10i64..60, 0.0f64..300.0, 0.0f64..300.0), 0..5),
                1..4,
            )
        ) {
            let runs: Vec<Vec<TestOpportunity>> = runs
                .into_iter()
                .map(|run| {
                    // Keep intervals of one trackable disjoint within a run.
                    let mut by_id: BTreeMap<u8, i64> = BTreeMap::new();
                    run.into_iter()
                        .map(|(id, start, len, x, y)| {
                            let cursor = by_id.entry(id).or_insert(0);
                            let s = *cursor + start * 100;
                            let e = s + len * 100;
                            *cursor = e + 100;
                            opp(&format!("t{id}"), rect(x, y, x + 600.0, y + 600.0), s, e)
                        })
                        .collect()
                })
                .collect();
            let out = intersect_runs(&runs, SCREEN, 0.1, 2.0);
            for o in &out {
                for run in &runs {
                    prop_assert!(run.iter().any(|r| r.trackable_id == o.trackable_id
                        && r.start_ms <= o.start_ms && o.end_ms <= r.end_ms
                        && r.stable_box.contains_rect(&o.stable_box, 1e-9)));
                }
            }
        }
    }
}
