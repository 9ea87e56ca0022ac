use arplay_core::pipeline::{analyze_runs, build_report, simulate_runs, AnalysisParams};
use arplay_core::report::{load_report, write_report};
use arplay_core::scheduler::{schedule_guided, GestureKind, GestureMix, ScheduleConfig};
use arplay_core::simulator::bench::benchmark_scenes;
use arplay_core::simulator::{execute_schedule, hit_test, JitterConfig};

const QUIET: JitterConfig = JitterConfig { vertex_noise_m: 0.0, dropout_prob: 0.0 };

#[test]
fn static_wall_yields_one_sound_opportunity() {
    let scene = &benchmark_scenes()[0];
    let params = AnalysisParams::default();
    let traces = simulate_runs(scene, &QUIET, &params).unwrap();
    let analysis = analyze_runs(&traces, &params).unwrap();

    assert_eq!(analysis.runs.len(), 3);
    assert_eq!(analysis.opportunities.len(), 1);
    let o = &analysis.opportunities[0];
    assert_eq!(o.trackable_id, "wall");
    assert_eq!(analysis.metrics.mutual_stability, Some(1.0));
    for t in [o.start_ms, (o.start_ms + o.end_ms) / 2, o.end_ms] {
        for p in o.stable_box.corners() {
            assert_eq!(hit_test(scene, t, p).as_deref(), Some("wall"), "t={t} p={p:?}");
        }
    }
}

#[test]
fn guided_taps_all_land_on_a_jittered_scene() {
    let scene = &benchmark_scenes()[3];
    let params = AnalysisParams::default();
    let traces = simulate_runs(scene, &scene.jitter, &params).unwrap();
    let analysis = analyze_runs(&traces, &params).unwrap();
    assert!(!analysis.opportunities.is_empty());

    let mut config = ScheduleConfig::new(scene.duration_ms, 5);
    config.mix = GestureMix::only(GestureKind::Tap);
    let schedule = schedule_guided(&analysis.opportunities, &config).unwrap();
    let report = execute_schedule(scene, &schedule);
    assert!(report.attempts[&GestureKind::Tap] > 0);
    assert_eq!(report.gsr.tap, Some(1.0));
}

#[test]
fn report_survives_a_disk_round_trip() {
    let scene = &benchmark_scenes()[8];
    let params = AnalysisParams { runs: 2, ..AnalysisParams::default() };
    let traces = simulate_runs(scene, &scene.jitter, &params).unwrap();
    let analysis = analyze_runs(&traces, &params).unwrap();
    let report = build_report(&analysis, &params, traces[0].metadata.clone());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    write_report(&report, &path).unwrap();
    let loaded = load_report(&path).unwrap();
    assert_eq!(loaded, report);
}
