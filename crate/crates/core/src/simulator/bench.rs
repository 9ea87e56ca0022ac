//! The built-in benchmark pack: nine scenes that vary plane count, screen
//! coverage, camera motion and detection jitter.

use std::f64::consts::TAU;

use super::scene::{CameraKeyframe, Intrinsics, JitterConfig, ScenePlane, SimScene};
use crate::math::Vec3;
use crate::trace::Screen;

pub const BENCH_DURATION_MS: i64 = 60_000;
pub const BENCH_FPS: f64 = 30.0;
const KEYFRAME_STEP_MS: i64 = 500;
const EYE_HEIGHT: f64 = 1.5;

fn plane(id: &str, center: Vec3, normal: Vec3, axis_u: Vec3, extents: [f64; 2]) -> ScenePlane {
    ScenePlane {
        id: id.into(),
        center,
        normal,
        axis_u,
        axis_v: axis_u.cross(normal),
        extents,
        detect_delay_ms: 0,
        lost_intervals: Vec::new(),
        vertices: None,
    }
}

/// Vertical plane facing +z.
fn wall(id: &str, center: Vec3, width: f64, height: f64) -> ScenePlane {
    plane(id, center, Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 0.0), [width, height])
}

/// Vertical plane turned `yaw_deg` about +y from facing +z.
fn turned_wall(id: &str, center: Vec3, yaw_deg: f64, width: f64, height: f64) -> ScenePlane {
    let a = yaw_deg.to_radians();
    plane(id, center, Vec3::new(a.sin(), 0.0, a.cos()), Vec3::new(a.cos(), 0.0, -a.sin()), [width, height])
}

/// Horizontal plane facing up.
fn floor(id: &str, center: Vec3, width: f64, depth: f64) -> ScenePlane {
    plane(id, center, Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0), [width, depth])
}

fn keyframes(f: impl Fn(f64) -> (Vec3, Vec3)) -> Vec<CameraKeyframe> {
    (0..=BENCH_DURATION_MS / KEYFRAME_STEP_MS)
        .map(|k| {
            let t_ms = k * KEYFRAME_STEP_MS;
            let (position, target) = f(t_ms as f64 / 1000.0);
            CameraKeyframe { t_ms, position, target, up: Vec3::new(0.0, 1.0, 0.0) }
        })
        .collect()
}

fn static_camera(position: Vec3, target: Vec3) -> Vec<CameraKeyframe> {
    vec![CameraKeyframe { t_ms: 0, position, target, up: Vec3::new(0.0, 1.0, 0.0) }]
}

/// Camera fixed at `position`, sweeping its look-at point sideways by `sway` meters.
fn pan(position: Vec3, target: Vec3, sway: f64, period_s: f64) -> Vec<CameraKeyframe> {
    keyframes(|t| (position, target + Vec3::new(sway * (TAU * t / period_s).sin(), 0.0, 0.0)))
}

/// Camera swinging back and forth on an arc around `pivot`, always looking at it.
fn orbit(pivot: Vec3, radius: f64, height: f64, arc_deg: f64, period_s: f64) -> Vec<CameraKeyframe> {
    keyframes(|t| {
        let a = arc_deg.to_radians() * (TAU * t / period_s).sin();
        let eye = Vec3::new(pivot.x + radius * a.sin(), height, pivot.z + radius * a.cos());
        (eye, pivot)
    })
}

fn scene(name: &str, planes: Vec<ScenePlane>, camera_path: Vec<CameraKeyframe>, jitter: JitterConfig) -> SimScene {
    SimScene {
        name: name.into(),
        planes,
        camera_path,
        intrinsics: Intrinsics::default(),
        screen: Screen::new(1920, 1080),
        fps: BENCH_FPS,
        duration_ms: BENCH_DURATION_MS,
        jitter,
        meta: Default::default(),
    }
}

const CALM: JitterConfig = JitterConfig { vertex_noise_m: 0.002, dropout_prob: 0.005 };
const NOISY: JitterConfig = JitterConfig { vertex_noise_m: 0.005, dropout_prob: 0.02 };

/// The benchmark pack, in a fixed order. Scene 1 is the single static wall.
pub fn benchmark_scenes() -> Vec<SimScene> {
    let eye = Vec3::new(0.0, EYE_HEIGHT, 0.0);
    let mut scenes = Vec::new();

    scenes.push(scene(
        "01-wall-static",
        vec![wall("wall", Vec3::new(0.0, EYE_HEIGHT, -3.5), 3.0, 2.0)],
        static_camera(eye, Vec3::new(0.0, EYE_HEIGHT, -3.5)),
        CALM,
    ));

    let mut rug = floor("floor", Vec3::new(0.0, 0.0, -2.9), 3.6, 3.0);
    rug.detect_delay_ms = 1500;
    scenes.push(scene(
        "02-floor-pan",
        vec![rug],
        pan(eye, Vec3::new(0.0, 0.0, -3.0), 0.5, 20.0),
        CALM,
    ));

    let mut table = floor("table", Vec3::new(0.0, 0.75, -2.0), 2.0, 1.4);
    table.lost_intervals = vec![[20_000, 21_500]];
    scenes.push(scene("03-table-orbit", vec![table], orbit(Vec3::new(0.0, 0.75, -2.0), 1.6, 2.0, 12.0, 40.0), CALM));

    scenes.push(scene(
        "04-two-walls-static",
        vec![
            wall("left", Vec3::new(-1.4, EYE_HEIGHT, -3.0), 1.6, 1.6),
            wall("right", Vec3::new(1.9, EYE_HEIGHT, -4.5), 2.0, 2.0),
        ],
        static_camera(eye, Vec3::new(0.0, EYE_HEIGHT, -3.5)),
        CALM,
    ));

    let mut back = wall("wall", Vec3::new(0.0, 1.25, -5.0), 3.6, 2.5);
    back.lost_intervals = vec![[30_000, 31_000]];
    scenes.push(scene(
        "05-wall-floor-pan",
        vec![floor("floor", Vec3::new(0.0, 0.0, -3.0), 3.0, 3.0), back],
        pan(Vec3::new(0.0, 1.6, 0.0), Vec3::new(0.0, 0.6, -4.0), 0.5, 24.0),
        CALM,
    ));

    // A small near panel partly hiding a large far wall.
    scenes.push(scene(
        "06-occluder-orbit",
        vec![
            wall("panel", Vec3::new(-1.1, EYE_HEIGHT, -2.5), 1.4, 1.4),
            wall("backdrop", Vec3::new(0.0, EYE_HEIGHT, -5.0), 6.0, 3.5),
        ],
        orbit(Vec3::new(0.0, EYE_HEIGHT, -4.0), 4.0, EYE_HEIGHT, 8.0, 30.0),
        CALM,
    ));

    let mut left = turned_wall("left", Vec3::new(-1.5, EYE_HEIGHT, -3.0), 30.0, 2.2, 2.2);
    left.detect_delay_ms = 2000;
    let mut right = turned_wall("right", Vec3::new(1.5, EYE_HEIGHT, -3.0), -30.0, 2.2, 2.2);
    right.lost_intervals = vec![[12_000, 12_500], [41_000, 43_000]];
    scenes.push(scene(
        "07-three-planes-pan",
        vec![left, right, floor("floor", Vec3::new(0.0, 0.0, -2.6), 2.4, 2.4)],
        pan(Vec3::new(0.0, 1.6, 0.0), Vec3::new(0.0, 0.9, -3.5), 0.4, 30.0),
        NOISY,
    ));

    scenes.push(scene(
        "08-large-wall",
        vec![wall("wall", Vec3::new(0.0, EYE_HEIGHT, -3.0), 5.0, 3.0)],
        pan(eye, Vec3::new(0.0, EYE_HEIGHT, -3.0), 0.3, 20.0),
        CALM,
    ));

    let mut a = wall("a", Vec3::new(-1.7, EYE_HEIGHT, -3.2), 2.0, 2.0);
    a.lost_intervals = vec![[25_000, 26_000]];
    let mut b = wall("b", Vec3::new(1.7, EYE_HEIGHT, -3.2), 2.0, 2.0);
    b.detect_delay_ms = 3000;
    let c = wall("c", Vec3::new(0.0, 0.6, -2.2), 1.2, 0.8);
    scenes.push(scene(
        "09-three-walls-orbit",
        vec![a, b, c],
        orbit(Vec3::new(0.0, EYE_HEIGHT, -3.6), 3.2, EYE_HEIGHT, 10.0, 40.0),
        NOISY,
    ));

    scenes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::detected_coverage;

    #[test]
    fn pack_shape() {
        let scenes = benchmark_scenes();
        assert_eq!(scenes.len(), 9);
        for s in &scenes {
            s.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
            assert_eq!(s.screen, Screen::new(1920, 1080));
            assert!(s.jitter.vertex_noise_m <= 0.005 && s.jitter.dropout_prob <= 0.02);
            for p in &s.planes {
                assert!(p.lost_intervals.iter().all(|[a, b]| b - a >= 300));
            }
        }
        let counts: Vec<usize> = scenes.iter().map(|s| s.planes.len()).collect();
        assert_eq!(counts.iter().min(), Some(&1));
        assert_eq!(counts.iter().max(), Some(&3));
    }

    #[test]
    fn coverage_spread() {
        let scenes = benchmark_scenes();
        let coverage: Vec<f64> = scenes.iter().map(|s| detected_coverage(s, 10_000, 60)).collect();
        assert!(coverage[7] > 0.4, "large wall covers {}", coverage[7]);
        assert!(coverage.iter().filter(|c| **c <= 0.4).count() >= 4, "{coverage:?}");
    }
}
