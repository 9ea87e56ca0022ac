use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scene::{ray_hits, SimScene};
use crate::geometry::ScreenPoint;
use crate::scheduler::{EventSchedule, GestureEvent, GestureKind, TimedPoint};

/// Minimum number of samples checked along each finger path.
const MIN_PATH_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OutcomeReason {
    Hit,
    MissNoPlane,
    LeftPlaneMidGesture,
    PlaneNotTracked,
    SplitTargets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureOutcome {
    pub event: GestureEvent,
    pub success: bool,
    pub reason: OutcomeReason,
    /// Plane the gesture landed on, when it started on one.
    pub plane: Option<String>,
}

/// Success rates per gesture kind; `None` where nothing was attempted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GsrSummary {
    #[serde(rename = "TAP")]
    pub tap: Option<f64>,
    #[serde(rename = "DRAG")]
    pub drag: Option<f64>,
    #[serde(rename = "PINCH")]
    pub pinch: Option<f64>,
    #[serde(rename = "ROTATE")]
    pub rotate: Option<f64>,
    pub overall: Option<f64>,
}

impl GsrSummary {
    pub fn of(&self, kind: GestureKind) -> Option<f64> {
        match kind {
            GestureKind::Tap => self.tap,
            GestureKind::Drag => self.drag,
            GestureKind::Pinch => self.pinch,
            GestureKind::Rotate => self.rotate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub gsr: GsrSummary,
    pub attempts: BTreeMap<GestureKind, usize>,
    pub successes: BTreeMap<GestureKind, usize>,
    pub outcomes: Vec<GestureOutcome>,
}

impl ExecutionReport {
    pub fn from_outcomes(outcomes: Vec<GestureOutcome>) -> Self {
        let mut attempts: BTreeMap<GestureKind, usize> = GestureKind::ALL.iter().map(|k| (*k, 0)).collect();
        let mut successes = attempts.clone();
        for o in &outcomes {
            *attempts.entry(o.event.kind).or_default() += 1;
            if o.success {
                *successes.entry(o.event.kind).or_default() += 1;
            }
        }
        let rate = |s: usize, a: usize| (a > 0).then(|| s as f64 / a as f64);
        let per = |k: GestureKind| rate(successes[&k], attempts[&k]);
        let gsr = GsrSummary {
            tap: per(GestureKind::Tap),
            drag: per(GestureKind::Drag),
            pinch: per(GestureKind::Pinch),
            rotate: per(GestureKind::Rotate),
            overall: rate(successes.values().sum(), attempts.values().sum()),
        };
        Self { gsr, attempts, successes, outcomes }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Linear interpolation of a finger path at `n` evenly spaced instants.
fn resample(track: &[TimedPoint], n: usize) -> Vec<(i64, ScreenPoint)> {
    let (first, last) = match (track.first(), track.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Vec::new(),
    };
    if track.len() == 1 || n <= 1 || last.t_ms == first.t_ms {
        return track.iter().map(|p| (p.t_ms, p.point)).collect();
    }
    (0..n)
        .map(|i| {
            let t = first.t_ms as f64 + (last.t_ms - first.t_ms) as f64 * i as f64 / (n - 1) as f64;
            let j = track.partition_point(|p| (p.t_ms as f64) <= t).clamp(1, track.len() - 1);
            let (a, b) = (track[j - 1], track[j]);
            let span = (b.t_ms - a.t_ms) as f64;
            let s = if span > 0.0 { ((t - a.t_ms as f64) / span).clamp(0.0, 1.0) } else { 1.0 };
            (t.round() as i64, a.point.lerp(b.point, s))
        })
        .collect()
}

/// What a single touch sample lands on.
enum Touch {
    Plane(String),
    Untracked,
    Nothing,
}

fn touch(scene: &SimScene, t_ms: i64, p: ScreenPoint) -> Touch {
    let hits = ray_hits(scene, t_ms.clamp(0, scene.duration_ms), p);
    match hits.iter().find(|h| h.detected) {
        Some(h) => Touch::Plane(h.plane_id.clone()),
        None if !hits.is_empty() => Touch::Untracked,
        None => Touch::Nothing,
    }
}

fn judge(scene: &SimScene, event: &GestureEvent) -> (OutcomeReason, Option<String>) {
    let samples: Vec<Vec<(i64, ScreenPoint)>> = event
        .tracks
        .iter()
        .map(|track| {
            let n = if event.kind == GestureKind::Tap { 1 } else { MIN_PATH_SAMPLES.max(track.len()) };
            resample(track, n)
        })
        .collect();
    if samples.is_empty() || samples.iter().any(|s| s.is_empty()) {
        return (OutcomeReason::MissNoPlane, None);
    }

    // Every finger must land on the same tracked plane.
    let mut target: Option<String> = None;
    for finger in &samples {
        let (t, p) = finger[0];
        match touch(scene, t, p) {
            Touch::Plane(id) => match &target {
                Some(existing) if *existing != id => return (OutcomeReason::SplitTargets, Some(existing.clone())),
                _ => target = Some(id),
            },
            Touch::Untracked => return (OutcomeReason::PlaneNotTracked, None),
            Touch::Nothing => return (OutcomeReason::MissNoPlane, None),
        }
    }
    let target = target.expect("at least one finger");

    // ...and stay on it for the whole gesture.
    for finger in &samples {
        for &(t, p) in &finger[1..] {
            match touch(scene, t, p) {
                Touch::Plane(id) if id == target => {}
                Touch::Untracked => {
                    let still_over_target = ray_hits(scene, t.clamp(0, scene.duration_ms), p)
                        .first()
                        .is_some_and(|h| h.plane_id == target);
                    let reason = if still_over_target {
                        OutcomeReason::PlaneNotTracked
                    } else {
                        OutcomeReason::LeftPlaneMidGesture
                    };
                    return (reason, Some(target));
                }
                _ => return (OutcomeReason::LeftPlaneMidGesture, Some(target)),
            }
        }
    }
    (OutcomeReason::Hit, Some(target))
}

/// Plays every event against the scene's ground truth.
///
/// A tap succeeds when it lands on a tracked plane; drags need every sampled
/// path point on the same plane; pinches and rotations need both fingers on
/// the same plane at every sample.
pub fn execute_schedule(scene: &SimScene, schedule: &EventSchedule) -> ExecutionReport {
    let outcomes = schedule
        .events
        .iter()
        .map(|event| {
            let (reason, plane) = judge(scene, event);
            GestureOutcome { event: event.clone(), success: reason == OutcomeReason::Hit, reason, plane }
        })
        .collect();
    ExecutionReport::from_outcomes(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use crate::scheduler::{schedule_random, GestureMix, Generator, ScheduleConfig};
    use crate::simulator::{detected_coverage, CameraKeyframe, Intrinsics, JitterConfig, ScenePlane};
    use crate::trace::Screen;

    fn scene() -> SimScene {
        SimScene {
            name: "exec".into(),
            planes: vec![
                ScenePlane {
                    id: "left".into(),
                    center: Vec3::new(-0.6, 0.0, -3.0),
                    normal: Vec3::new(0.0, 0.0, 1.0),
                    axis_u: Vec3::new(1.0, 0.0, 0.0),
                    axis_v: Vec3::new(0.0, -1.0, 0.0),
                    extents: [1.0, 1.0],
                    detect_delay_ms: 0,
                    lost_intervals: vec![[8000, 9000]],
                    vertices: None,
                },
                ScenePlane {
                    id: "right".into(),
                    center: Vec3::new(0.6, 0.0, -3.0),
                    normal: Vec3::new(0.0, 0.0, 1.0),
                    axis_u: Vec3::new(1.0, 0.0, 0.0),
                    axis_v: Vec3::new(0.0, -1.0, 0.0),
                    extents: [1.0, 1.0],
                    detect_delay_ms: 0,
                    lost_intervals: vec![],
                    vertices: None,
                },
            ],
            camera_path: vec![CameraKeyframe {
                t_ms: 0,
                position: Vec3::ZERO,
                target: Vec3::new(0.0, 0.0, -1.0),
                up: Vec3::new(0.0, 1.0, 0.0),
            }],
            intrinsics: Intrinsics::default(),
            screen: Screen::new(1920, 1080),
            fps: 30.0,
            duration_ms: 10_000,
            jitter: JitterConfig::default(),
            meta: Default::default(),
        }
    }

    fn event(kind: GestureKind, tracks: Vec<Vec<(i64, f64, f64)>>) -> GestureEvent {
        let tracks: Vec<Vec<TimedPoint>> =
            tracks.into_iter().map(|t| t.into_iter().map(TimedPoint::from).collect()).collect();
        let start = tracks[0][0].t_ms;
        let end = tracks[0].last().unwrap().t_ms;
        GestureEvent { kind, time_ms: [start, end], tracks, target_id: None }
    }

    fn schedule(events: Vec<GestureEvent>) -> EventSchedule {
        EventSchedule {
            generator: Generator::Guided,
            seed: 0,
            mix: GestureMix::default(),
            duration_ms: 10_000,
            min_gap_ms: 100,
            durations: Default::default(),
            events,
        }
    }

    /// Screen x of world x on the z = -3 plane.
    fn sx(x: f64) -> f64 {
        let half_w = 3.0 * (30.0_f64).to_radians().tan() * 16.0 / 9.0;
        (x / half_w + 1.0) / 2.0 * 1920.0
    }

    #[test]
    fn reasons() {
        let (l, r) = (sx(-0.6), sx(0.6));
        let report = execute_schedule(
            &scene(),
            &schedule(vec![
                event(GestureKind::Tap, vec![vec![(100, l, 540.0)]]),
                event(GestureKind::Tap, vec![vec![(100, 960.0, 50.0)]]),
                event(GestureKind::Tap, vec![vec![(8500, l, 540.0)]]),
                event(GestureKind::Drag, vec![vec![(100, l, 540.0), (600, r, 540.0)]]),
                event(GestureKind::Pinch, vec![vec![(100, l, 540.0), (800, l, 500.0)], vec![(100, r, 540.0), (800, r, 500.0)]]),
                event(GestureKind::Rotate, vec![vec![(100, r - 20.0, 540.0), (800, r, 520.0)], vec![(100, r + 20.0, 540.0), (800, r, 560.0)]]),
                event(GestureKind::Drag, vec![vec![(7500, l, 540.0), (8400, l, 560.0)]]),
            ]),
        );
        let reasons: Vec<OutcomeReason> = report.outcomes.iter().map(|o| o.reason).collect();
        assert_eq!(
            reasons,
            vec![
                OutcomeReason::Hit,
                OutcomeReason::MissNoPlane,
                OutcomeReason::PlaneNotTracked,
                OutcomeReason::LeftPlaneMidGesture,
                OutcomeReason::SplitTargets,
                OutcomeReason::Hit,
                OutcomeReason::PlaneNotTracked,
            ]
        );
        assert_eq!(report.gsr.tap, Some(1.0 / 3.0));
        assert_eq!(report.gsr.rotate, Some(1.0));
        assert_eq!(report.gsr.overall, Some(2.0 / 7.0));
    }

    #[test]
    fn empty_schedule_reports_no_rates() {
        let report = execute_schedule(&scene(), &schedule(vec![]));
        assert_eq!(report.gsr, GsrSummary::default());
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!(v["gsr"]["TAP"].is_null());
        assert_eq!(v["outcomes"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn random_tap_rate_tracks_coverage() {
        // One wall covering roughly a quarter of the screen for the whole scene.
        let mut s = scene();
        s.planes.truncate(1);
        s.planes[0].lost_intervals.clear();
        s.planes[0].center = Vec3::new(0.0, 0.0, -3.0);
        let half_h = 3.0 * (30.0_f64).to_radians().tan();
        let half_w = half_h * 16.0 / 9.0;
        s.planes[0].extents = [half_w, 2.0 * half_h * 0.5];
        s.duration_ms = 200_000;
        let coverage = detected_coverage(&s, 0, 200);
        assert!((coverage - 0.25).abs() < 0.01, "coverage {coverage}");
        let mut cfg = ScheduleConfig::new(200_000, 77);
        cfg.mix = GestureMix::only(GestureKind::Tap);
        let sched = schedule_random(s.screen, &cfg).unwrap();
        assert!(sched.events.len() >= 1000);
        let gsr = execute_schedule(&s, &sched).gsr.tap.unwrap();
        assert!((gsr - 0.25).abs() <= 0.05, "gsr {gsr}");
    }
}
