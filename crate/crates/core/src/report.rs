//! Gantt chart rendering and the JSON analysis report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifespan::TestOpportunity;
use crate::metrics::VideoMetrics;
use crate::pipeline::AnalysisParams;
use crate::trace::Screen;

pub const DEFAULT_CHART_WIDTH: f64 = 1000.0;

const LEFT: f64 = 140.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const LANE: f64 = 32.0;
const BLOCK: f64 = 22.0;
const AXIS: f64 = 40.0;
const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Tick spacing in seconds giving at most about a dozen ticks.
fn tick_step_s(duration_s: f64) -> f64 {
    const STEPS: [f64; 12] = [0.5, 1.0, 2.0, 5.0, 10.0, 15.0, 30.0, 60.0, 120.0, 300.0, 600.0, 1800.0];
    STEPS.iter().copied().find(|s| duration_s / s <= 12.0).unwrap_or(3600.0)
}

fn fmt_seconds(s: f64) -> String {
    if s.fract() == 0.0 {
        format!("{s:.0}s")
    } else {
        format!("{s:.1}s")
    }
}

/// Renders one lane per trackable (in order of first appearance) and one
/// block per opportunity on a seconds axis spanning `[0, duration_ms]`.
///
/// `width` is the plot area width; labels and margins add to it.
pub fn render_gantt(opps: &[TestOpportunity], duration_ms: i64, width: f64) -> String {
    assert!(duration_ms > 0, "gantt chart needs a positive duration");
    let mut ordered: Vec<&TestOpportunity> = opps.iter().collect();
    ordered.sort_by(|a, b| a.start_ms.cmp(&b.start_ms).then_with(|| a.trackable_id.cmp(&b.trackable_id)));
    let mut lanes: Vec<&str> = Vec::new();
    for o in &ordered {
        if !lanes.contains(&o.trackable_id.as_str()) {
            lanes.push(&o.trackable_id);
        }
    }

    let x_of = |t_ms: i64| LEFT + t_ms as f64 / duration_ms as f64 * width;
    let plot_bottom = TOP + LANE * lanes.len() as f64;
    let total_w = LEFT + width + RIGHT;
    let total_h = plot_bottom + AXIS;

    let mut svg = String::new();
    let _ = writeln!(svg, r##"<?xml version="1.0" encoding="UTF-8"?>"##);
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{total_w:.0}" height="{total_h:.0}" viewBox="0 0 {total_w:.0} {total_h:.0}" font-family="sans-serif" font-size="12">"##
    );
    let _ = writeln!(svg, r##"<rect class="background" x="0" y="0" width="{total_w:.0}" height="{total_h:.0}" fill="#ffffff"/>"##);

    for (i, id) in lanes.iter().enumerate() {
        let y = TOP + LANE * i as f64;
        let fill = if i % 2 == 0 { "#f4f4f4" } else { "#ffffff" };
        let _ = writeln!(
            svg,
            r##"<rect class="lane" x="{LEFT:.2}" y="{y:.2}" width="{width:.2}" height="{LANE:.2}" fill="{fill}"/>"##
        );
        let _ = writeln!(
            svg,
            r##"<text class="lane-label" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 8.0,
            y + LANE / 2.0 + 4.0,
            escape(id)
        );
    }

    for o in &ordered {
        let lane = lanes.iter().position(|id| *id == o.trackable_id).expect("lane exists");
        let x = x_of(o.start_ms);
        let w = x_of(o.end_ms) - x;
        let y = TOP + LANE * lane as f64 + (LANE - BLOCK) / 2.0;
        let label = format!("{:.0}x{:.0}", o.stable_box.width(), o.stable_box.height());
        let _ = writeln!(
            svg,
            r##"<rect class="opportunity" data-id="{}" data-start-ms="{}" data-end-ms="{}" x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{BLOCK:.2}" fill="{}"><title>{} {}-{} ms {label}</title></rect>"##,
            escape(&o.trackable_id),
            o.start_ms,
            o.end_ms,
            PALETTE[lane % PALETTE.len()],
            escape(&o.trackable_id),
            o.start_ms,
            o.end_ms
        );
        let _ = writeln!(
            svg,
            r##"<text class="block-label" x="{:.2}" y="{:.2}" font-size="10" fill="#ffffff">{label}</text>"##,
            x + 3.0,
            y + BLOCK / 2.0 + 3.5
        );
    }

    let _ = writeln!(
        svg,
        r##"<line class="axis" x1="{LEFT:.2}" y1="{plot_bottom:.2}" x2="{:.2}" y2="{plot_bottom:.2}" stroke="#333333"/>"##,
        LEFT + width
    );
    let duration_s = duration_ms as f64 / 1000.0;
    let step = tick_step_s(duration_s);
    let ticks = (duration_s / step).floor() as i64;
    for k in 0..=ticks {
        let s = k as f64 * step;
        let x = x_of((s * 1000.0).round() as i64);
        let _ = writeln!(
            svg,
            r##"<line class="tick" x1="{x:.2}" y1="{plot_bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333333"/>"##,
            plot_bottom + 5.0
        );
        let _ = writeln!(
            svg,
            r##"<text class="tick-label" x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            plot_bottom + 18.0,
            fmt_seconds(s)
        );
    }
    let _ = writeln!(
        svg,
        r##"<text class="axis-title" x="{:.2}" y="{:.2}" text-anchor="middle">time (s)</text>"##,
        LEFT + width / 2.0,
        plot_bottom + 34.0
    );
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: not a valid report: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
}

impl ReportError {
    pub fn is_io(&self) -> bool {
        matches!(self, ReportError::Io { .. })
    }
}

/// Opportunity report of one analyzed video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub params: AnalysisParams,
    pub screen: Screen,
    pub duration_ms: i64,
    /// Trace metadata carried through unchanged.
    #[serde(default)]
    pub meta: BTreeMap<String, serde_json::Value>,
    pub metrics: VideoMetrics,
    pub opportunities: Vec<TestOpportunity>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn write_report(report: &AnalysisReport, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    fs::write(path, report.to_json()).map_err(|source| ReportError::Io { path: path.into(), source })
}

pub fn load_report(path: impl AsRef<Path>) -> Result<AnalysisReport, ReportError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| ReportError::Parse { path: path.into(), source })
}
