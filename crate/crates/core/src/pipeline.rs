//! End-to-end composition: trace analysis, run intersection, reporting, and
//! the guided-versus-random comparison on simulated scenes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifespan::{intersect_runs, opportunities_from_boxes, TestOpportunity, DEFAULT_MIN_LIFESPAN_S};
use crate::metrics::{compute_metrics, VideoMetrics};
use crate::report::AnalysisReport;
use crate::scheduler::{schedule_guided, schedule_random, GestureKind, ScheduleConfig, ScheduleError};
use crate::simulator::{execute_schedule, generate_trace, ExecutionReport, GsrSummary, JitterConfig, SimError, SimScene};
use crate::trace::{sample_frames, PlaybackTrace, Screen, TraceError};
use crate::visibility::{analyze_trace as analyze_frames, DEFAULT_MIN_VISIBILITY};

pub const DEFAULT_ANALYSIS_FPS: f64 = 10.0;
pub const DEFAULT_RUNS: usize = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub fps: f64,
    pub min_visibility: f64,
    pub min_lifespan_s: f64,
    pub runs: usize,
    pub jitter_seed_base: u64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            fps: DEFAULT_ANALYSIS_FPS,
            min_visibility: DEFAULT_MIN_VISIBILITY,
            min_lifespan_s: DEFAULT_MIN_LIFESPAN_S,
            runs: DEFAULT_RUNS,
            jitter_seed_base: 0,
        }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(PipelineError::BadParameter(format!("fps must be positive, got {}", self.fps)));
        }
        if !(0.0..=1.0).contains(&self.min_visibility) {
            return Err(PipelineError::BadParameter(format!(
                "min visibility must lie in [0, 1], got {}",
                self.min_visibility
            )));
        }
        if !(self.min_lifespan_s.is_finite() && self.min_lifespan_s >= 0.0) {
            return Err(PipelineError::BadParameter(format!(
                "min lifespan must be >= 0, got {}",
                self.min_lifespan_s
            )));
        }
        if self.runs == 0 {
            return Err(PipelineError::BadParameter("runs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sampling, per-frame visibility and life span analysis of one trace.
pub fn analyze_trace(trace: &PlaybackTrace, params: &AnalysisParams) -> Result<Vec<TestOpportunity>, PipelineError> {
    params.validate()?;
    let sampled = sample_frames(trace, params.fps)?;
    let boxes = analyze_frames(&sampled, params.min_visibility);
    let timestamps: Vec<i64> = sampled.frames.iter().map(|f| f.timestamp_ms).collect();
    Ok(opportunities_from_boxes(&boxes, &timestamps, sampled.screen(), params.min_visibility, params.min_lifespan_s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiRunAnalysis {
    pub runs: Vec<Vec<TestOpportunity>>,
    /// Opportunities present in every run; the single run's own when there is one.
    pub opportunities: Vec<TestOpportunity>,
    pub metrics: VideoMetrics,
    pub screen: Screen,
    pub duration_ms: i64,
}

/// Analyzes each trace as an independent run of the same recording and
/// intersects the results.
pub fn analyze_runs(traces: &[PlaybackTrace], params: &AnalysisParams) -> Result<MultiRunAnalysis, PipelineError> {
    let first = traces.first().ok_or_else(|| PipelineError::BadParameter("no traces to analyze".into()))?;
    let screen = first.screen();
    if let Some(t) = traces.iter().find(|t| t.screen() != screen) {
        return Err(PipelineError::BadParameter(format!(
            "runs disagree on screen size: {}x{} vs {}x{}",
            screen.w,
            screen.h,
            t.screen().w,
            t.screen().h
        )));
    }
    let runs = traces.iter().map(|t| analyze_trace(t, params)).collect::<Result<Vec<_>, _>>()?;
    let opportunities = if runs.len() == 1 {
        runs[0].clone()
    } else {
        intersect_runs(&runs, screen, params.min_visibility, params.min_lifespan_s)
    };
    let metrics = compute_metrics(&runs, screen);
    let duration_ms = traces.iter().filter_map(|t| t.frames.last()).map(|f| f.timestamp_ms).max().unwrap_or(0).max(1);
    Ok(MultiRunAnalysis { runs, opportunities, metrics, screen, duration_ms })
}

/// Renders `params.runs` independently jittered traces of a scene.
pub fn simulate_runs(
    scene: &SimScene,
    jitter: &JitterConfig,
    params: &AnalysisParams,
) -> Result<Vec<PlaybackTrace>, PipelineError> {
    (0..params.runs as u64)
        .map(|i| Ok(generate_trace(scene, params.jitter_seed_base.wrapping_add(i), jitter)?))
        .collect()
}

pub fn build_report(
    analysis: &MultiRunAnalysis,
    params: &AnalysisParams,
    meta: BTreeMap<String, serde_json::Value>,
) -> AnalysisReport {
    AnalysisReport {
        params: *params,
        screen: analysis.screen,
        duration_ms: analysis.duration_ms,
        meta,
        metrics: analysis.metrics.clone(),
        opportunities: analysis.opportunities.clone(),
    }
}

/// Attempt and success counts per gesture kind.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GsrTally {
    pub attempts: BTreeMap<GestureKind, usize>,
    pub successes: BTreeMap<GestureKind, usize>,
}

impl GsrTally {
    pub fn add(&mut self, report: &ExecutionReport) {
        for (k, n) in &report.attempts {
            *self.attempts.entry(*k).or_default() += n;
        }
        for (k, n) in &report.successes {
            *self.successes.entry(*k).or_default() += n;
        }
    }

    /// Pooled success rate over `kinds`; `None` if none were attempted.
    pub fn rate(&self, kinds: &[GestureKind]) -> Option<f64> {
        let a: usize = kinds.iter().map(|k| self.attempts.get(k).copied().unwrap_or(0)).sum();
        let s: usize = kinds.iter().map(|k| self.successes.get(k).copied().unwrap_or(0)).sum();
        (a > 0).then(|| s as f64 / a as f64)
    }

    pub fn summary(&self) -> GsrSummary {
        GsrSummary {
            tap: self.rate(&[GestureKind::Tap]),
            drag: self.rate(&[GestureKind::Drag]),
            pinch: self.rate(&[GestureKind::Pinch]),
            rotate: self.rate(&[GestureKind::Rotate]),
            overall: self.rate(&GestureKind::ALL),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedComparison {
    pub seed: u64,
    pub opportunities: usize,
    pub guided_events: usize,
    pub random_events: usize,
    pub guided: GsrSummary,
    pub random: GsrSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scene: String,
    pub params: AnalysisParams,
    pub seeds: Vec<SeedComparison>,
    pub guided: GsrTally,
    pub random: GsrTally,
}

impl Comparison {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("comparison serializes");
        s.push('\n');
        s
    }

    /// Plain-text table of pooled GSR per kind per generator.
    pub fn table(&self) -> String {
        let pct = |r: Option<f64>| r.map_or("-".to_string(), |v| format!("{:.1}%", v * 100.0));
        let mut out = String::new();
        let _ = writeln!(out, "scene: {}  seeds: {}", self.scene, self.seeds.len());
        let _ = writeln!(out, "{:<10}{:>10}{:>10}", "gesture", "guided", "random");
        for k in GestureKind::ALL {
            let _ = writeln!(out, "{:<10}{:>10}{:>10}", k.as_str(), pct(self.guided.rate(&[k])), pct(self.random.rate(&[k])));
        }
        let _ = writeln!(
            out,
            "{:<10}{:>10}{:>10}",
            "overall",
            pct(self.guided.rate(&GestureKind::ALL)),
            pct(self.random.rate(&GestureKind::ALL))
        );
        out
    }
}

/// Runs guided and random schedules against the same scene for each seed.
///
/// Each seed renders `params.runs` jittered traces (seeded from the schedule
/// seed), intersects their opportunities, and drives a guided schedule from
/// them; the random schedule shares duration, throttle and seed.
pub fn compare_scene(scene: &SimScene, seeds: &[u64], params: &AnalysisParams) -> Result<Comparison, PipelineError> {
    let mut out = Comparison {
        scene: scene.name.clone(),
        params: *params,
        seeds: Vec::new(),
        guided: GsrTally::default(),
        random: GsrTally::default(),
    };
    for &seed in seeds {
        let run_params = AnalysisParams { jitter_seed_base: seed.wrapping_mul(1000), ..*params };
        let traces = simulate_runs(scene, &scene.jitter, &run_params)?;
        let analysis = analyze_runs(&traces, &run_params)?;
        let config = ScheduleConfig::new(scene.duration_ms, seed);
        let guided = execute_schedule(scene, &schedule_guided(&analysis.opportunities, &config)?);
        let random = execute_schedule(scene, &schedule_random(scene.screen, &config)?);
        out.guided.add(&guided);
        out.random.add(&random);
        out.seeds.push(SeedComparison {
            seed,
            opportunities: analysis.opportunities.len(),
            guided_events: guided.outcomes.len(),
            random_events: random.outcomes.len(),
            guided: guided.gsr,
            random: random.gsr,
        });
    }
    Ok(out)
}
