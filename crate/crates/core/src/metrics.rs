//! Per-video quality features computed from one or more analysis runs.

use serde::{Deserialize, Serialize};

use crate::geometry::{rect_area, rect_intersect, rect_iou};
use crate::lifespan::{cross_run_overlaps, TestOpportunity};
use crate::trace::Screen;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMetrics {
    /// Mean opportunity duration over all runs, seconds.
    pub avg_plane_duration_s: f64,
    /// Mean pairwise set similarity between runs; absent for a single run.
    pub mutual_stability: Option<f64>,
    /// Absent for a single run.
    pub mean_overlap_area_ratio: Option<f64>,
    pub opportunity_count: usize,
}

/// IoU of two closed time intervals. Two identical instants count as 1.
pub fn temporal_iou(a: &TestOpportunity, b: &TestOpportunity) -> f64 {
    let inter = (a.end_ms.min(b.end_ms) - a.start_ms.max(b.start_ms)).max(0);
    let union = a.end_ms.max(b.end_ms) - a.start_ms.min(b.start_ms);
    if union == 0 {
        return if a.start_ms == b.start_ms { 1.0 } else { 0.0 };
    }
    inter as f64 / union as f64
}

pub fn opportunity_similarity(a: &TestOpportunity, b: &TestOpportunity) -> f64 {
    if a.trackable_id != b.trackable_id {
        return 0.0;
    }
    temporal_iou(a, b) * rect_iou(&a.stable_box, &b.stable_box)
}

type OppKey = (i64, i64, [u64; 4]);

fn key(o: &TestOpportunity) -> OppKey {
    let r = &o.stable_box;
    (o.start_ms, o.end_ms, [r.x_min.to_bits(), r.y_min.to_bits(), r.x_max.to_bits(), r.y_max.to_bits()])
}

/// Set-level Jaccard similarity of two runs.
///
/// Opportunities are paired greedily, best similarity first, one partner
/// each; ties break on the unordered pair's content so the result does not
/// depend on argument order. The score is the summed similarity of matched
/// pairs over `|A| + |B| - matched`.
pub fn run_similarity(a: &[TestOpportunity], b: &[TestOpportunity]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut candidates: Vec<(f64, (OppKey, OppKey), usize, usize)> = Vec::new();
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let s = opportunity_similarity(x, y);
            if s > 0.0 {
                let (kx, ky) = (key(x), key(y));
                candidates.push((s, if kx <= ky { (kx, ky) } else { (ky, kx) }, i, j));
            }
        }
    }
    candidates.sort_by(|p, q| q.0.total_cmp(&p.0).then_with(|| p.1.cmp(&q.1)));
    let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
    let (mut total, mut matched) = (0.0, 0usize);
    for (s, _, i, j) in candidates {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            total += s;
            matched += 1;
        }
    }
    total / (a.len() + b.len() - matched) as f64
}

/// Area of `o`'s box after intersecting it with its largest same-trackable,
/// time-overlapping counterpart in every other run; zero when some run has none.
fn overlap_area(o: &TestOpportunity, others: &[&Vec<TestOpportunity>]) -> f64 {
    let mut current = o.stable_box;
    for run in others {
        let best = run
            .iter()
            .filter(|p| p.trackable_id == o.trackable_id && p.start_ms <= o.end_ms && o.start_ms <= p.end_ms)
            .filter_map(|p| rect_intersect(&current, &p.stable_box))
            .max_by(|x, y| rect_area(x).total_cmp(&rect_area(y)));
        match best {
            Some(r) => current = r,
            None => return 0.0,
        }
    }
    rect_area(&current)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn compute_metrics(runs: &[Vec<TestOpportunity>], screen: Screen) -> VideoMetrics {
    let avg_plane_duration_s =
        mean(runs.iter().flatten().map(|o| o.duration_ms() as f64 / 1000.0)).unwrap_or(0.0);
    let opportunity_count = cross_run_overlaps(runs).len();
    if runs.len() < 2 {
        return VideoMetrics {
            avg_plane_duration_s,
            mutual_stability: None,
            mean_overlap_area_ratio: None,
            opportunity_count,
        };
    }

    let mut pairs = Vec::new();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            pairs.push(run_similarity(&runs[i], &runs[j]));
        }
    }
    let mutual_stability = mean(pairs.into_iter());

    let area = screen.area();
    let overlap = (0..runs.len())
        .map(|r| {
            let others: Vec<&Vec<TestOpportunity>> =
                runs.iter().enumerate().filter(|(i, _)| *i != r).map(|(_, run)| run).collect();
            mean(runs[r].iter().map(|o| overlap_area(o, &others) / area)).unwrap_or(0.0)
        })
        .fold(f64::INFINITY, f64::min);

    VideoMetrics {
        avg_plane_duration_s,
        mutual_stability,
        mean_overlap_area_ratio: Some(overlap),
        opportunity_count,
    }
}
