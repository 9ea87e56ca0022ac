//! Synthetic ground-truth world: renders playback traces from scene
//! descriptions and judges gestures against the true plane layout.

pub mod bench;
mod execute;
mod scene;

pub use execute::{execute_schedule, ExecutionReport, GestureOutcome, GsrSummary, OutcomeReason};
pub use scene::{
    detected_coverage, generate_trace, hit_test, ray_hits, scene_from_trace, CameraKeyframe, CameraPose,
    Intrinsics, JitterConfig, RayHit, ScenePlane, SimError, SimScene,
};
