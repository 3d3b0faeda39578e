//! `fsm`: analyze scenarios, generate synthetic ones and sweep assumptions.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;

use fsm_core::scenario::synth::{
    synth_scp, synth_sdli, synth_tailgate, ScpParams, SdliParams, TailgateParams,
};
use fsm_core::scenario::{
    analyze, load_config, load_scenario, save_scenario, sweep, write_sweep_csv, ArtifactOptions,
    SweepParam,
};
use fsm_core::{EgoLaneRestriction, FsmError, RunConfig};

#[derive(Parser)]
#[command(
    name = "fsm",
    version,
    about = "Field of Safe Motion reachability analysis"
)]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze every frame of a scenario and write the metrics report.
    Analyze(AnalyzeArgs),
    /// Write a synthetic case-study scenario.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Frame violation rate per scenario across values of one assumption, as CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Run configuration (JSON); omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Keep the ego inside the lanes it currently occupies.
    #[arg(long)]
    ego_in_lane: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for one SVG per frame.
    #[arg(long)]
    render: Option<PathBuf>,
    /// Directory for PGM debug masks.
    #[arg(long)]
    pgm: Option<PathBuf>,
    /// Report path (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum SynthKind {
    /// Car following on a straight freeway.
    Tailgate {
        /// Time gap to the lead vehicle [s].
        #[arg(long, default_value_t = 0.5)]
        gap: f64,
        #[arg(long, default_value_t = 30.0)]
        speed: f64,
        #[arg(long, default_value_t = 3)]
        lanes: usize,
        /// Paved shoulder beyond the last lane [m].
        #[arg(long, default_value_t = 0.0)]
        shoulder: f64,
        /// Leave the adjacent lanes empty.
        #[arg(long)]
        no_neighbors: bool,
        #[arg(long, default_value_t = 2.0)]
        duration: f64,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Same-direction lateral incursion followed by scripted braking.
    Sdli {
        #[arg(long, default_value_t = 2.0)]
        cut_in_time: f64,
        /// Lateral speed of the cut-in [m/s].
        #[arg(long, default_value_t = 1.0)]
        lateral_rate: f64,
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stop-sign crossing of a five-lane road.
    Scp {
        /// Distance of the lane C car west of the crossing [m].
        #[arg(long, default_value_t = 60.0)]
        c_west: f64,
        /// Distance of the lane B car east of the crossing [m].
        #[arg(long, default_value_t = 55.0)]
        b_east: f64,
        /// Add a lane A car this far east of the crossing [m].
        #[arg(long)]
        a_east: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        cross_speed: f64,
        /// Drop all cross traffic.
        #[arg(long)]
        empty: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// replanning_delay, a_min or roadgraph.
    #[arg(long)]
    param: String,
    #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
    values: Vec<String>,
    /// Scenario file; repeat for several.
    #[arg(long = "scenario", required = true)]
    scenarios: Vec<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config_or_default(path: Option<&Path>) -> fsm_core::Result<RunConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(RunConfig::default()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn run_analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let mut config = config_or_default(args.config.as_deref())?;
    if args.ego_in_lane {
        config.ego_lane_restriction = EgoLaneRestriction::InLane;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let opts = ArtifactOptions {
        svg: args.render.is_some() || config.render,
        pgm: args.pgm.is_some(),
    };
    let (report, files) = analyze(&scenario, &config, opts)?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write_file(&args.out, json.as_bytes())?;

    let svg_dir = args
        .render
        .clone()
        .or_else(|| config.render.then(|| args.out.with_extension("frames")));
    for (frame, out) in report.frames.iter().zip(&files) {
        let stem = format!("t{:06}ms", frame.t_index());
        if let (Some(dir), Some(svg)) = (&svg_dir, &out.svg) {
            write_file(&dir.join(format!("{stem}.svg")), svg.as_bytes())?;
        }
        if let Some(dir) = &args.pgm {
            for (name, bytes) in &out.pgm {
                write_file(&dir.join(format!("{name}.pgm")), bytes)?;
            }
        }
    }
    info!(
        "{}: {} frames, violation rate {:.3}",
        report.scenario,
        report.frames.len(),
        report.metrics.frame_violation_rate
    );
    Ok(())
}

fn run_synth(kind: SynthKind) -> anyhow::Result<()> {
    let (scenario, out) = match kind {
        SynthKind::Tailgate {
            gap,
            speed,
            lanes,
            shoulder,
            no_neighbors,
            duration,
            name,
            out,
        } => {
            check_positive(&[("gap", gap), ("speed", speed), ("duration", duration)])?;
            if lanes == 0 {
                return Err(FsmError::config("lanes must be at least 1").into());
            }
            if !(shoulder.is_finite() && shoulder >= 0.0) {
                return Err(FsmError::config(format!(
                    "--shoulder must be non-negative, got {shoulder}"
                ))
                .into());
            }
            let mut p = TailgateParams::new(gap, speed, lanes);
            p.shoulder_m = shoulder;
            p.neighbors = !no_neighbors;
            p.duration_s = duration;
            p.name = name;
            (synth_tailgate(&p), out)
        }
        SynthKind::Sdli {
            cut_in_time,
            lateral_rate,
            duration,
            out,
        } => {
            check_positive(&[
                ("cut-in-time", cut_in_time),
                ("lateral-rate", lateral_rate),
                ("duration", duration),
            ])?;
            let mut p = SdliParams::new(cut_in_time, lateral_rate);
            p.duration_s = duration;
            (synth_sdli(&p), out)
        }
        SynthKind::Scp {
            c_west,
            b_east,
            a_east,
            cross_speed,
            empty,
            out,
        } => {
            check_positive(&[
                ("c-west", c_west),
                ("b-east", b_east),
                ("cross-speed", cross_speed),
            ])?;
            let p = ScpParams {
                c_west_m: c_west,
                b_east_m: b_east,
                a_east_m: a_east,
                cross_speed,
                cross_traffic: !empty,
                ..ScpParams::default()
            };
            (synth_scp(&p), out)
        }
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    save_scenario(&scenario, &out)?;
    Ok(())
}

fn check_positive(values: &[(&str, f64)]) -> fsm_core::Result<()> {
    for (name, v) in values {
        if !(v.is_finite() && *v > 0.0) {
            return Err(FsmError::config(format!(
                "--{name} must be positive, got {v}"
            )));
        }
    }
    Ok(())
}

fn run_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let param: SweepParam = args.param.parse()?;
    let base = config_or_default(args.config.as_deref())?;
    let scenarios = args
        .scenarios
        .iter()
        .map(load_scenario)
        .collect::<fsm_core::Result<Vec<_>>>()?;
    let rows = sweep(&scenarios, &base, param, &args.values)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    match &args.out {
        Some(path) => write_file(path, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<FsmError>() {
        Some(FsmError::Validation(_)) => 2,
        Some(FsmError::Config(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(3);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global pool is configured once");
    }
    let result = match cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Synth { kind } => run_synth(kind),
        Command::Sweep(s) => run_sweep(s),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
