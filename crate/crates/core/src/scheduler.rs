//! Timed gesture scripts: a guided generator confined to test opportunities
//! and an unconstrained random (Monkey-style) baseline.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Rect, ScreenPoint};
use crate::lifespan::TestOpportunity;
use crate::trace::Screen;

/// Default throttle between consecutive events, in milliseconds.
pub const DEFAULT_MIN_GAP_MS: i64 = 100;

/// Fraction of a box's width/height kept clear on each side when placing points.
const BOX_INSET: f64 = 0.05;

/// Samples per track for multi-point gestures.
const TRACK_SAMPLES: usize = 11;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("gesture mix: {0}")]
    BadMix(String),
    #[error("invalid schedule parameter: {0}")]
    BadParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GestureKind {
    Tap,
    Drag,
    Pinch,
    Rotate,
}

impl GestureKind {
    pub const ALL: [GestureKind; 4] = [GestureKind::Tap, GestureKind::Drag, GestureKind::Pinch, GestureKind::Rotate];

    pub fn as_str(self) -> &'static str {
        match self {
            GestureKind::Tap => "TAP",
            GestureKind::Drag => "DRAG",
            GestureKind::Pinch => "PINCH",
            GestureKind::Rotate => "ROTATE",
        }
    }

    pub fn finger_count(self) -> usize {
        match self {
            GestureKind::Tap | GestureKind::Drag => 1,
            GestureKind::Pinch | GestureKind::Rotate => 2,
        }
    }
}

impl fmt::Display for GestureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GestureKind {
    type Err = ScheduleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TAP" => Ok(GestureKind::Tap),
            "DRAG" | "SWIPE" => Ok(GestureKind::Drag),
            "PINCH" => Ok(GestureKind::Pinch),
            "ROTATE" => Ok(GestureKind::Rotate),
            other => Err(ScheduleError::BadMix(format!("unknown gesture kind {other:?}"))),
        }
    }
}

/// Probability of drawing each gesture kind. Serialized as `{"TAP": p, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<GestureKind, f64>", into = "BTreeMap<GestureKind, f64>")]
pub struct GestureMix {
    weights: BTreeMap<GestureKind, f64>,
}

impl GestureMix {
    pub fn new(weights: BTreeMap<GestureKind, f64>) -> Result<Self, ScheduleError> {
        if weights.values().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(ScheduleError::BadMix("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = weights.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ScheduleError::BadMix(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(Self { weights })
    }

    pub fn only(kind: GestureKind) -> Self {
        Self { weights: BTreeMap::from([(kind, 1.0)]) }
    }

    pub fn probability(&self, kind: GestureKind) -> f64 {
        self.weights.get(&kind).copied().unwrap_or(0.0)
    }

    fn draw(&self, rng: &mut impl Rng) -> GestureKind {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = GestureKind::Tap;
        for (&kind, &p) in &self.weights {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = kind;
            if u < acc {
                return kind;
            }
        }
        last
    }
}

impl Default for GestureMix {
    fn default() -> Self {
        Self {
            weights: BTreeMap::from([
                (GestureKind::Tap, 0.55),
                (GestureKind::Drag, 0.25),
                (GestureKind::Pinch, 0.10),
                (GestureKind::Rotate, 0.10),
            ]),
        }
    }
}

impl TryFrom<BTreeMap<GestureKind, f64>> for GestureMix {
    type Error = ScheduleError;
    fn try_from(w: BTreeMap<GestureKind, f64>) -> Result<Self, Self::Error> {
        GestureMix::new(w)
    }
}

impl From<GestureMix> for BTreeMap<GestureKind, f64> {
    fn from(m: GestureMix) -> Self {
        m.weights
    }
}

/// Parses `TAP=0.5,DRAG=0.5` style mixes.
impl FromStr for GestureMix {
    type Err = ScheduleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut weights = BTreeMap::new();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once(['=', ':'])
                .ok_or_else(|| ScheduleError::BadMix(format!("expected KIND=P, got {part:?}")))?;
            let p: f64 = v.trim().parse().map_err(|_| ScheduleError::BadMix(format!("bad probability {v:?}")))?;
            weights.insert(k.parse()?, p);
        }
        GestureMix::new(weights)
    }
}

/// Nominal gesture durations in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GestureDurations {
    pub tap_ms: i64,
    pub drag_ms: i64,
    pub pinch_ms: i64,
    pub rotate_ms: i64,
}

impl Default for GestureDurations {
    fn default() -> Self {
        Self { tap_ms: 50, drag_ms: 500, pinch_ms: 700, rotate_ms: 700 }
    }
}

impl GestureDurations {
    pub fn of(&self, kind: GestureKind) -> i64 {
        match kind {
            GestureKind::Tap => self.tap_ms,
            GestureKind::Drag => self.drag_ms,
            GestureKind::Pinch => self.pinch_ms,
            GestureKind::Rotate => self.rotate_ms,
        }
    }
}

/// One finger sample: `[t_ms, x, y]` on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(i64, f64, f64)", into = "(i64, f64, f64)")]
pub struct TimedPoint {
    pub t_ms: i64,
    pub point: ScreenPoint,
}

impl From<(i64, f64, f64)> for TimedPoint {
    fn from((t_ms, x, y): (i64, f64, f64)) -> Self {
        TimedPoint { t_ms, point: ScreenPoint::new(x, y) }
    }
}

impl From<TimedPoint> for (i64, f64, f64) {
    fn from(p: TimedPoint) -> Self {
        (p.t_ms, p.point.x, p.point.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureEvent {
    pub kind: GestureKind,
    #[serde(rename = "t")]
    pub time_ms: [i64; 2],
    /// One path per finger.
    pub tracks: Vec<Vec<TimedPoint>>,
    #[serde(rename = "target")]
    pub target_id: Option<String>,
}

impl GestureEvent {
    pub fn t_start_ms(&self) -> i64 {
        self.time_ms[0]
    }

    pub fn t_end_ms(&self) -> i64 {
        self.time_ms[1]
    }

    pub fn points(&self) -> impl Iterator<Item = &TimedPoint> {
        self.tracks.iter().flatten()
    }

    /// Structural check of the per-kind track shape.
    pub fn is_well_formed(&self) -> bool {
        let timing_ok = self.t_end_ms() >= self.t_start_ms();
        let shape_ok = match self.kind {
            GestureKind::Tap => self.tracks.len() == 1 && self.tracks[0].len() == 1,
            GestureKind::Drag => self.tracks.len() == 1 && self.tracks[0].len() >= 2,
            GestureKind::Pinch | GestureKind::Rotate => {
                self.tracks.len() == 2
                    && self.tracks[0].len() == self.tracks[1].len()
                    && self.tracks[0].iter().zip(&self.tracks[1]).all(|(a, b)| a.t_ms == b.t_ms)
            }
        };
        timing_ok && shape_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Generator {
    Guided,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSchedule {
    pub generator: Generator,
    pub seed: u64,
    pub mix: GestureMix,
    #[serde(default)]
    pub duration_ms: i64,
    #[serde(default)]
    pub min_gap_ms: i64,
    #[serde(default)]
    pub durations: GestureDurations,
    pub events: Vec<GestureEvent>,
}

impl EventSchedule {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Knobs shared by both generators.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConfig {
    pub duration_ms: i64,
    pub seed: u64,
    pub mix: GestureMix,
    pub min_gap_ms: i64,
    pub durations: GestureDurations,
}

impl ScheduleConfig {
    pub fn new(duration_ms: i64, seed: u64) -> Self {
        Self {
            duration_ms,
            seed,
            mix: GestureMix::default(),
            min_gap_ms: DEFAULT_MIN_GAP_MS,
            durations: GestureDurations::default(),
        }
    }

    fn validate(&self) -> Result<(), ScheduleError> {
        if self.min_gap_ms < 0 {
            return Err(ScheduleError::BadParameter(format!("min_gap_ms must be >= 0, got {}", self.min_gap_ms)));
        }
        if self.duration_ms < 0 {
            return Err(ScheduleError::BadParameter(format!("duration_ms must be >= 0, got {}", self.duration_ms)));
        }
        if GestureKind::ALL.iter().any(|k| self.durations.of(*k) < 0) {
            return Err(ScheduleError::BadParameter("gesture durations must be >= 0".into()));
        }
        Ok(())
    }

    fn empty_schedule(&self, generator: Generator) -> EventSchedule {
        EventSchedule {
            generator,
            seed: self.seed,
            mix: self.mix.clone(),
            duration_ms: self.duration_ms,
            min_gap_ms: self.min_gap_ms,
            durations: self.durations,
            events: Vec::new(),
        }
    }

    /// Idle steps always advance the clock, even with a zero throttle.
    fn step(&self) -> i64 {
        self.min_gap_ms.max(1)
    }
}

/// Uniform point strictly inside `region`.
fn point_in(rng: &mut impl Rng, region: &Rect) -> ScreenPoint {
    let x = if region.width() > 0.0 { rng.random_range(region.x_min..region.x_max) } else { region.x_min };
    let y = if region.height() > 0.0 { rng.random_range(region.y_min..region.y_max) } else { region.y_min };
    ScreenPoint::new(x, y)
}

fn inset(r: &Rect, frac: f64) -> Rect {
    let (dx, dy) = (r.width() * frac, r.height() * frac);
    Rect { x_min: r.x_min + dx, y_min: r.y_min + dy, x_max: r.x_max - dx, y_max: r.y_max - dy }
}

fn sample_times(start: i64, duration: i64) -> Vec<i64> {
    (0..TRACK_SAMPLES)
        .map(|i| start + ((duration as f64) * i as f64 / (TRACK_SAMPLES - 1) as f64).round() as i64)
        .collect()
}

/// Distance from `c` to the nearest side of `r`.
fn clearance(c: ScreenPoint, r: &Rect) -> f64 {
    (c.x - r.x_min).min(r.x_max - c.x).min(c.y - r.y_min).min(r.y_max - c.y).max(0.0)
}

/// Builds the finger tracks of one gesture with every point inside `region`.
fn build_tracks(rng: &mut impl Rng, kind: GestureKind, region: &Rect, start: i64, duration: i64) -> Vec<Vec<TimedPoint>> {
    match kind {
        GestureKind::Tap => vec![vec![TimedPoint { t_ms: start, point: point_in(rng, region) }]],
        GestureKind::Drag => {
            let (a, b) = (point_in(rng, region), point_in(rng, region));
            let times = sample_times(start, duration);
            let n = (times.len() - 1) as f64;
            vec![times.iter().enumerate().map(|(i, &t)| TimedPoint { t_ms: t, point: a.lerp(b, i as f64 / n) }).collect()]
        }
        GestureKind::Pinch | GestureKind::Rotate => {
            let center = point_in(rng, region);
            let room = clearance(center, region);
            let theta0 = rng.random_range(0.0..std::f64::consts::TAU);
            let (r0, r1, sweep) = if kind == GestureKind::Pinch {
                (room * rng.random_range(0.2..0.95), room * rng.random_range(0.2..0.95), 0.0)
            } else {
                let r = room * rng.random_range(0.3..0.95);
                (r, r, rng.random_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2))
            };
            let times = sample_times(start, duration);
            let n = (times.len() - 1) as f64;
            let finger = |sign: f64| -> Vec<TimedPoint> {
                times
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| {
                        let s = i as f64 / n;
                        let r = r0 + (r1 - r0) * s;
                        let a = theta0 + sweep * s;
                        let p = ScreenPoint::new(center.x + sign * r * a.cos(), center.y + sign * r * a.sin());
                        TimedPoint { t_ms: t, point: p }
                    })
                    .collect()
            };
            vec![finger(1.0), finger(-1.0)]
        }
    }
}

/// Guided generation: at each step with at least one active opportunity, draw
/// a gesture kind, pick an active opportunity uniformly, and place the whole
/// gesture inside its stable box and remaining interval.
pub fn schedule_guided(opps: &[TestOpportunity], config: &ScheduleConfig) -> Result<EventSchedule, ScheduleError> {
    config.validate()?;
    let mut schedule = config.empty_schedule(Generator::Guided);
    if opps.is_empty() {
        return Ok(schedule);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut t = 0;
    while t < config.duration_ms {
        let active: Vec<&TestOpportunity> = opps.iter().filter(|o| o.is_active_at(t)).collect();
        if active.is_empty() {
            t += config.step();
            continue;
        }
        let kind = config.mix.draw(&mut rng);
        let target = active[rng.random_range(0..active.len())];
        let dur = config.durations.of(kind);
        let end = t + dur;
        if end > target.end_ms || end > config.duration_ms {
            t += config.step();
            continue;
        }
        let region = inset(&target.stable_box, BOX_INSET);
        let tracks = build_tracks(&mut rng, kind, &region, t, dur);
        schedule.events.push(GestureEvent {
            kind,
            time_ms: [t, end],
            tracks,
            target_id: Some(target.trackable_id.clone()),
        });
        t = end + config.step();
    }
    Ok(schedule)
}

/// Random baseline: same kinds, timing and throttle, with coordinates drawn
/// over the whole screen and no regard for opportunities.
pub fn schedule_random(screen: Screen, config: &ScheduleConfig) -> Result<EventSchedule, ScheduleError> {
    config.validate()?;
    if screen.w == 0 || screen.h == 0 {
        return Err(ScheduleError::BadParameter("screen has no area".into()));
    }
    let mut schedule = config.empty_schedule(Generator::Random);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let region = Rect::full_screen(screen.w as f64, screen.h as f64);
    let mut t = 0;
    while t < config.duration_ms {
        let kind = config.mix.draw(&mut rng);
        let dur = config.durations.of(kind);
        let end = t + dur;
        if end > config.duration_ms {
            t += config.step();
            continue;
        }
        let tracks = build_tracks(&mut rng, kind, &region, t, dur);
        schedule.events.push(GestureEvent { kind, time_ms: [t, end], tracks, target_id: None });
        t = end + config.step();
    }
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn opp(x0: f64, y0: f64, x1: f64, y1: f64, start: i64, end: i64) -> TestOpportunity {
        TestOpportunity {
            trackable_id: "plane".into(),
            stable_box: Rect::new(x0, y0, x1, y1).unwrap(),
            start_ms: start,
            end_ms: end,
            frame_indices: vec![],
        }
    }

    #[test]
    fn no_opportunities_no_events() {
        let s = schedule_guided(&[], &ScheduleConfig::new(60_000, 1)).unwrap();
        assert!(s.events.is_empty());
    }

    #[test]
    fn guided_events_stay_in_window_and_box() {
        let o = opp(300.0, 200.0, 900.0, 700.0, 5000, 9000);
        let s = schedule_guided(std::slice::from_ref(&o), &ScheduleConfig::new(20_000, 42)).unwrap();
        assert!(!s.events.is_empty());
        for e in &s.events {
            assert!(e.is_well_formed());
            assert!(5000 <= e.t_start_ms() && e.t_end_ms() <= 9000, "{:?}", e.time_ms);
            assert!(e.points().all(|p| {
                let q = p.point;
                q.x > o.stable_box.x_min && q.x < o.stable_box.x_max && q.y > o.stable_box.y_min && q.y < o.stable_box.y_max
            }));
        }
        for w in s.events.windows(2) {
            assert!(w[0].t_end_ms() < w[1].t_start_ms());
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let o = [opp(0.0, 0.0, 500.0, 500.0, 0, 30_000)];
        let cfg = ScheduleConfig::new(30_000, 9);
        let a = schedule_guided(&o, &cfg).unwrap().to_json();
        let b = schedule_guided(&o, &cfg).unwrap().to_json();
        assert_eq!(a, b);
        let c = schedule_guided(&o, &ScheduleConfig::new(30_000, 10)).unwrap().to_json();
        assert_ne!(a, c);
    }

    #[test]
    fn throttle_bounds_random_event_count() {
        let s = schedule_random(Screen::new(1920, 1080), &ScheduleConfig::new(10_000, 3)).unwrap();
        assert!(!s.events.is_empty() && s.events.len() <= 100);
    }

    #[test]
    fn tap_only_mix() {
        let mut cfg = ScheduleConfig::new(10_000, 3);
        cfg.mix = GestureMix::only(GestureKind::Tap);
        let s = schedule_random(Screen::new(1920, 1080), &cfg).unwrap();
        assert!(s.events.iter().all(|e| e.kind == GestureKind::Tap));
    }

    #[test]
    fn random_taps_are_uniform() {
        let mut cfg = ScheduleConfig::new(5_100_000, 2024);
        cfg.mix = GestureMix::only(GestureKind::Tap);
        cfg.min_gap_ms = 0;
        let screen = Screen::new(1920, 1080);
        let s = schedule_random(screen, &cfg).unwrap();
        assert!(s.events.len() >= 99_000);
        let mut counts = [0usize; 100];
        for e in &s.events {
            let p = e.tracks[0][0].point;
            let cx = ((p.x / 1920.0) * 10.0).floor().min(9.0) as usize;
            let cy = ((p.y / 1080.0) * 10.0).floor().min(9.0) as usize;
            counts[cy * 10 + cx] += 1;
        }
        let expected = s.events.len() as f64 / 100.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let critical = ChiSquared::new(99.0).unwrap().inverse_cdf(0.999);
        assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
    }

    #[test]
    fn mix_parsing_and_validation() {
        let m: GestureMix = "TAP=0.5, DRAG=0.5".parse().unwrap();
        assert_eq!(m.probability(GestureKind::Drag), 0.5);
        assert!("TAP=0.5".parse::<GestureMix>().is_err());
        assert!("WAVE=1.0".parse::<GestureMix>().is_err());
        assert!(GestureMix::new(BTreeMap::from([(GestureKind::Tap, -0.5), (GestureKind::Drag, 1.5)])).is_err());
    }

    #[test]
    fn schedule_json_shape() {
        let o = [opp(0.0, 0.0, 500.0, 500.0, 0, 3000)];
        let s = schedule_guided(&o, &ScheduleConfig::new(3000, 1)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["generator"], "GUIDED");
        assert!(v["mix"]["TAP"].is_number());
        let e = &v["events"][0];
        assert!(e["t"].as_array().unwrap().len() == 2);
        assert!(e["tracks"][0][0].as_array().unwrap().len() == 3);
        assert_eq!(e["target"], "plane");
        assert_eq!(EventSchedule::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn negative_gap_rejected() {
        let mut cfg = ScheduleConfig::new(1000, 0);
        cfg.min_gap_ms = -1;
        assert!(schedule_random(Screen::new(10, 10), &cfg).is_err());
    }
}
