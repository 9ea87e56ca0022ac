use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use arplay_core::lifespan::TestOpportunity;
use arplay_core::pipeline::{
    analyze_runs, build_report, compare_scene, simulate_runs, AnalysisParams, PipelineError, DEFAULT_ANALYSIS_FPS,
    DEFAULT_RUNS,
};
use arplay_core::report::{load_report, render_gantt, write_report, ReportError, DEFAULT_CHART_WIDTH};
use arplay_core::scheduler::{
    schedule_guided, schedule_random, EventSchedule, GestureMix, ScheduleConfig, DEFAULT_MIN_GAP_MS,
};
use arplay_core::simulator::bench::benchmark_scenes;
use arplay_core::simulator::{execute_schedule, generate_trace, scene_from_trace, JitterConfig, SimError, SimScene};
use arplay_core::trace::{load_trace, save_trace, TraceError};
use arplay_core::visibility::DEFAULT_MIN_VISIBILITY;

#[derive(Parser)]
#[command(name = "arplay", version, about = "Find and exercise gesture test opportunities in recorded AR sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract test opportunities from one or more traces of the same session.
    Analyze(AnalyzeArgs),
    /// Build a gesture schedule from an analysis report.
    Schedule(ScheduleArgs),
    /// Play a schedule against a scene and report gesture success rates.
    Simulate(SimulateArgs),
    /// Guided versus random success rates on a scene over several seeds.
    Compare(CompareArgs),
    /// Render a trace file from a scene.
    GenTrace(GenTraceArgs),
    /// Write the built-in benchmark scenes as JSON files.
    Scenes(ScenesArgs),
}

#[derive(clap::Args, Clone)]
struct ParamArgs {
    /// Analysis frame rate.
    #[arg(long, default_value_t = DEFAULT_ANALYSIS_FPS)]
    fps: f64,
    /// Minimum stable box area as a fraction of the screen.
    #[arg(long, default_value_t = DEFAULT_MIN_VISIBILITY)]
    min_visibility: f64,
    /// Minimum life span in seconds.
    #[arg(long, default_value_t = arplay_core::lifespan::DEFAULT_MIN_LIFESPAN_S)]
    min_lifespan: f64,
    /// Number of analysis runs to intersect.
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    /// Jitter seed of the first regenerated run; run i uses base + i.
    #[arg(long, default_value_t = 0)]
    jitter_seed_base: u64,
}

impl ParamArgs {
    fn params(&self) -> AnalysisParams {
        AnalysisParams {
            fps: self.fps,
            min_visibility: self.min_visibility,
            min_lifespan_s: self.min_lifespan,
            runs: self.runs,
            jitter_seed_base: self.jitter_seed_base,
        }
    }
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Trace files. Several files are treated as repeated runs.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    /// Output directory for report.json and gantt.svg.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Guided,
    Random,
}

#[derive(clap::Args)]
struct ScheduleArgs {
    /// Analysis report produced by `analyze`.
    report: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gesture mix, e.g. "TAP=0.55,DRAG=0.25,PINCH=0.1,ROTATE=0.1".
    #[arg(long)]
    mix: Option<GestureMix>,
    #[arg(long, default_value_t = DEFAULT_MIN_GAP_MS)]
    min_gap_ms: i64,
    /// Defaults to the analyzed session length.
    #[arg(long)]
    duration_ms: Option<i64>,
    #[arg(long, value_enum, default_value = "guided")]
    generator: GeneratorArg,
    /// Output schedule JSON file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Scene JSON file, or `bench:N` for built-in scene N (1-based).
    scene: String,
    #[arg(long)]
    schedule: PathBuf,
    /// Output outcome report JSON file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct CompareArgs {
    /// Scene JSON file, or `bench:N` for built-in scene N (1-based).
    scene: String,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    seeds: Vec<u64>,
    #[command(flatten)]
    params: ParamArgs,
    /// Output directory for comparison.json and comparison.txt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct GenTraceArgs {
    /// Scene JSON file, or `bench:N` for built-in scene N (1-based).
    scene: String,
    #[arg(long, default_value_t = 0)]
    jitter_seed: u64,
    /// Override the scene's vertex noise (meters).
    #[arg(long)]
    noise: Option<f64>,
    /// Override the scene's per-frame dropout probability.
    #[arg(long)]
    dropout: Option<f64>,
    /// Output trace file (JSONL).
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ScenesArgs {
    #[arg(long)]
    out: PathBuf,
}

/// Failure classes mapped to exit codes.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        let io = cause.is::<io::Error>()
            || cause.downcast_ref::<TraceError>().is_some_and(TraceError::is_io)
            || cause.downcast_ref::<ReportError>().is_some_and(ReportError::is_io)
            || matches!(cause.downcast_ref::<SimError>(), Some(SimError::Trace(t)) if t.is_io())
            || matches!(
                cause.downcast_ref::<PipelineError>(),
                Some(PipelineError::Trace(t)) | Some(PipelineError::Sim(SimError::Trace(t))) if t.is_io()
            );
        if io {
            return 2;
        }
    }
    1
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn load_scene(spec: &str) -> Result<SimScene> {
    if let Some(n) = spec.strip_prefix("bench:") {
        let n: usize = n.parse().map_err(|_| anyhow!("bad benchmark scene index {n:?}"))?;
        let scenes = benchmark_scenes();
        return n
            .checked_sub(1)
            .and_then(|i| scenes.into_iter().nth(i))
            .ok_or_else(|| anyhow!("benchmark scenes are numbered 1 to 9, got {n}"));
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
    SimScene::from_json(&text).with_context(|| format!("in {spec}"))
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let mut params = args.params.params();
    params.validate()?;
    let first = load_trace(&args.traces[0])?;
    let meta = first.metadata.clone();
    let traces = if args.traces.len() > 1 {
        let mut all = vec![first];
        for p in &args.traces[1..] {
            all.push(load_trace(p)?);
        }
        params.runs = all.len();
        all
    } else if params.runs > 1 {
        match scene_from_trace(&first) {
            Some(parsed) => {
                let (scene, jitter) = parsed?;
                simulate_runs(&scene, &jitter, &params)?
            }
            None => {
                eprintln!(
                    "warning: {} carries no scene description; analyzing it as a single run",
                    args.traces[0].display()
                );
                params.runs = 1;
                vec![first]
            }
        }
    } else {
        vec![first]
    };

    let analysis = analyze_runs(&traces, &params)?;
    let report = build_report(&analysis, &params, meta);
    create_dir(&args.out)?;
    write_report(&report, args.out.join("report.json"))?;
    write_file(
        &args.out.join("gantt.svg"),
        &render_gantt(&report.opportunities, report.duration_ms, DEFAULT_CHART_WIDTH),
    )?;
    println!("runs: {}", params.runs);
    println!("opportunities: {}", report.opportunities.len());
    for o in &report.opportunities {
        print_opportunity(o);
    }
    let m = &report.metrics;
    println!("avg plane duration: {:.2}s", m.avg_plane_duration_s);
    if let Some(s) = m.mutual_stability {
        println!("mutual stability: {s:.3}");
    }
    Ok(())
}

fn print_opportunity(o: &TestOpportunity) {
    let b = &o.stable_box;
    println!(
        "  {:<12} {:>7}-{:<7} ms  box [{:.0}, {:.0}, {:.0}, {:.0}]",
        o.trackable_id, o.start_ms, o.end_ms, b.x_min, b.y_min, b.x_max, b.y_max
    );
}

fn schedule(args: ScheduleArgs) -> Result<()> {
    let report = load_report(&args.report)?;
    let mut config = ScheduleConfig::new(args.duration_ms.unwrap_or(report.duration_ms), args.seed);
    config.min_gap_ms = args.min_gap_ms;
    if let Some(mix) = args.mix {
        config.mix = mix;
    }
    let schedule = match args.generator {
        GeneratorArg::Guided => schedule_guided(&report.opportunities, &config)?,
        GeneratorArg::Random => schedule_random(report.screen, &config)?,
    };
    write_file(&args.out, &schedule.to_json())?;
    println!("events: {}", schedule.events.len());
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let scene = load_scene(&args.scene)?;
    let text = fs::read_to_string(&args.schedule).with_context(|| format!("reading {}", args.schedule.display()))?;
    let schedule = EventSchedule::from_json(&text).with_context(|| format!("in {}", args.schedule.display()))?;
    if schedule.events.iter().any(|e| e.t_start_ms() < 0 || e.t_end_ms() > scene.duration_ms) {
        bail!("schedule extends past the scene's {} ms", scene.duration_ms);
    }
    let report = execute_schedule(&scene, &schedule);
    let mut json = report.to_json();
    json.push('\n');
    write_file(&args.out, &json)?;
    let attempts: usize = report.attempts.values().sum();
    match report.gsr.overall {
        Some(g) => println!("attempts: {attempts}  overall GSR: {:.1}%", g * 100.0),
        None => println!("attempts: 0"),
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let scene = load_scene(&args.scene)?;
    let params = args.params.params();
    params.validate()?;
    if args.seeds.is_empty() {
        bail!("at least one seed is required");
    }
    let comparison = compare_scene(&scene, &args.seeds, &params)?;
    create_dir(&args.out)?;
    write_file(&args.out.join("comparison.json"), &comparison.to_json())?;
    let table = comparison.table();
    write_file(&args.out.join("comparison.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn gen_trace(args: GenTraceArgs) -> Result<()> {
    let scene = load_scene(&args.scene)?;
    let jitter = JitterConfig {
        vertex_noise_m: args.noise.unwrap_or(scene.jitter.vertex_noise_m),
        dropout_prob: args.dropout.unwrap_or(scene.jitter.dropout_prob),
    };
    let trace = generate_trace(&scene, args.jitter_seed, &jitter)?;
    save_trace(&trace, &args.out)?;
    println!("frames: {}", trace.frames.len());
    Ok(())
}

fn scenes(args: ScenesArgs) -> Result<()> {
    create_dir(&args.out)?;
    for scene in benchmark_scenes() {
        let path = args.out.join(format!("{}.json", scene.name));
        let mut json = scene.to_json();
        json.push('\n');
        write_file(&path, &json)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Schedule(a) => schedule(a),
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare(a),
        Command::GenTrace(a) => gen_trace(a),
        Command::Scenes(a) => scenes(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
