//! `robocpd`: run synthetic experiments, detect changes in recorded streams
//! and tabulate the worst-case delay bound.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod settings;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use robocpd::delay::{heatmap, heatmap_csv, DelayQuery};
use robocpd::experiment::{
    detection_row, detections_csv, metrics_csv, run_experiment, summary_csv, DetectorKind, ExperimentSpec,
    DETECTIONS_HEADER,
};
use robocpd::streams::{generate, load_well_log, parse_stream_csv, scenario_catalog, stream_csv, WELL_LOG_DIVISOR};
use robocpd::{Error, OnlineDetector, Regime};

use settings::{parse_grid, parse_n_grid, Layer, ScenarioRef, DEFAULT_JUMP_GRID, DEFAULT_N_GRID, DEFAULT_REPLICATES};

/// A failed run: message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::UnknownScenario { .. } => Failure::usage(e.to_string()),
            _ => Failure::data(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "robocpd", version, about = "Online change-point detection for heavy-tailed streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicate a synthetic scenario and score the detections.
    Simulate(SimulateArgs),
    /// Run a detector over a recorded stream.
    Detect(DetectArgs),
    /// Tabulate the worst-case detection-delay bound over (n, jump) grids.
    DelayHeatmap(HeatmapArgs),
    /// Print the built-in scenarios.
    ListScenarios,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML file with defaults for any of the flags (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Diameter of the mean set. Required.
    #[arg(long)]
    g: Option<f64>,
    /// Second-moment bound of the noise [default: 1].
    #[arg(long)]
    sigma: Option<f64>,
    /// False-positive budget [default: 0.1].
    #[arg(long)]
    delta: Option<f64>,
    /// Constant set: empirical or theoretical [default: empirical].
    #[arg(long)]
    regime: Option<String>,
    /// Clipping level [default: 2G].
    #[arg(long)]
    lambda: Option<f64>,
    /// Output path (a directory for `simulate`, a file otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectorFlags {
    /// clipped or glr [default: clipped].
    #[arg(long)]
    detector: Option<String>,
    /// Keep at most this many candidate splits per segment.
    #[arg(long)]
    max_window: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    det: DetectorFlags,
    /// Catalog scenario name (see `list-scenarios`).
    #[arg(long)]
    scenario: Option<String>,
    /// Number of Monte Carlo replicates [default: 30].
    #[arg(long)]
    replicates: Option<usize>,
    /// Base seed; replicate i uses seed + i [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Also write every replicate's stream as `stream-<seed>.csv`.
    #[arg(long)]
    dump_streams: bool,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    det: DetectorFlags,
    /// Input file: a `t,x_0,...` CSV, or one value per line with `--well-log`.
    input: PathBuf,
    /// Treat the input as a well log (one reading per line, divided by 10^4.5).
    #[arg(long)]
    well_log: bool,
    /// Expected dimension; a mismatch with the file is an error.
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Args)]
struct HeatmapArgs {
    #[command(flatten)]
    common: Common,
    /// Pre-change sample counts, `start:stop:step` or a comma list [default: 100:2000:100].
    #[arg(long)]
    n_grid: Option<String>,
    /// Jump sizes, `start:stop:step` or a comma list [default: 0.5:10:0.5].
    #[arg(long)]
    jump_grid: Option<String>,
    /// Failure probability of the delay guarantee [default: 0.1].
    #[arg(long)]
    delta_prime: Option<f64>,
}

fn common_layer(c: &Common) -> Result<Layer, Failure> {
    Ok(Layer {
        g: c.g,
        sigma: c.sigma,
        delta: c.delta,
        regime: c.regime.as_deref().map(str::parse::<Regime>).transpose()?,
        lambda: c.lambda,
        out: c.out.clone(),
        ..Layer::default()
    })
}

fn detector_layer(d: &DetectorFlags, base: Layer) -> Result<Layer, Failure> {
    Ok(Layer {
        detector: d.detector.as_deref().map(str::parse::<DetectorKind>).transpose()?,
        max_window: d.max_window,
        ..base
    })
}

/// Merge flags over the config file named in `common`.
fn resolve(flags: Layer, common: &Common) -> Result<Layer, Failure> {
    match &common.config {
        Some(p) => Ok(flags.over(Layer::load(p)?)),
        None => Ok(flags),
    }
}

/// `# config: {...}` provenance line.
fn config_line(resolved: &impl Serialize) -> String {
    let json = serde_json::to_string(resolved).expect("settings serialize");
    format!("# config: {json}\n")
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SimulateConfig<'a> {
    command: &'static str,
    scenario: &'a ScenarioRef,
    #[serde(flatten)]
    spec: &'a ExperimentSpec,
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let flags = Layer {
        scenario: args.scenario.clone().map(ScenarioRef::Name),
        replicates: args.replicates,
        seed: args.seed,
        ..detector_layer(&args.det, common_layer(&args.common)?)?
    };
    let layer = resolve(flags, &args.common)?;
    let (scenario_name, scenario) = layer.scenario()?;
    let spec = ExperimentSpec {
        scenario_name,
        scenario,
        params: layer.detector_params()?,
        replicates: layer.replicates.unwrap_or(DEFAULT_REPLICATES),
        base_seed: layer.seed.unwrap_or(0),
    };
    let outcome = run_experiment(&spec)?;
    let header = config_line(&SimulateConfig {
        command: "simulate",
        scenario: layer.scenario.as_ref().expect("scenario resolved above"),
        spec: &spec,
    });

    let Some(dir) = layer.out.as_deref() else {
        print!("{header}{}", metrics_csv(&outcome));
        eprint!("{}", summary_csv(&outcome.summary));
        return Ok(());
    };
    fs::create_dir_all(dir).map_err(|e| Failure::data(format!("cannot create {}: {e}", dir.display())))?;
    write_file(&dir.join("metrics.csv"), &format!("{header}{}", metrics_csv(&outcome)))?;
    write_file(&dir.join("summary.csv"), &format!("{header}{}", summary_csv(&outcome.summary)))?;
    write_file(&dir.join("detections.csv"), &format!("{header}{}", detections_csv(&outcome)))?;
    if args.dump_streams {
        for r in &outcome.replicates {
            let stream = generate(&spec.scenario, r.seed)?;
            write_file(
                &dir.join(format!("stream-{}.csv", r.seed)),
                &format!("{header}{}", stream_csv(&stream)),
            )?;
        }
    }
    let s = &outcome.summary;
    eprintln!(
        "{} replicates: median regret {} [{}, {}], fpr {:.4}; wrote {}",
        s.replicates,
        s.regret.median,
        s.regret.q05,
        s.regret.q95,
        s.fpr,
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct DetectConfig<'a> {
    command: &'static str,
    input: &'a Path,
    well_log: bool,
    samples: usize,
    dim: usize,
    params: robocpd::DetectorParams,
}

fn detect(args: DetectArgs) -> Result<(), Failure> {
    let flags = Layer {
        dim: args.dim,
        ..detector_layer(&args.det, common_layer(&args.common)?)?
    };
    let layer = resolve(flags, &args.common)?;
    let params = layer.detector_params()?;

    let stream = if args.well_log {
        load_well_log(&args.input, WELL_LOG_DIVISOR)?
    } else {
        let text = fs::read_to_string(&args.input)
            .map_err(|e| Failure::data(format!("cannot read {}: {e}", args.input.display())))?;
        parse_stream_csv(&text)?
    };
    let dim = match (stream.first().map(Vec::len), layer.dim) {
        (Some(got), Some(want)) if got != want => {
            return Err(Failure::data(format!(
                "{} has dimension {got}, but --dim is {want}",
                args.input.display()
            )))
        }
        (Some(got), _) => got,
        (None, want) => want.unwrap_or(1),
    };
    let mut detector = params.build(dim)?;
    let detections = detector.run(&stream)?;

    let mut text = config_line(&DetectConfig {
        command: "detect",
        input: &args.input,
        well_log: args.well_log,
        samples: stream.len(),
        dim,
        params,
    });
    text.push_str(DETECTIONS_HEADER);
    text.push('\n');
    for d in &detections {
        let _ = writeln!(text, "{}", detection_row(d));
    }
    emit(layer.out.as_deref(), &text)?;
    eprintln!("{} samples, {} detections", stream.len(), detections.len());
    Ok(())
}

#[derive(Serialize)]
struct HeatmapConfig<'a> {
    command: &'static str,
    g: f64,
    sigma: f64,
    lambda: f64,
    regime: Regime,
    delta: f64,
    delta_prime: f64,
    n_grid: &'a [u64],
    jump_grid: &'a [f64],
}

fn delay_heatmap(args: HeatmapArgs) -> Result<(), Failure> {
    let flags = Layer {
        n_grid: args.n_grid.clone(),
        jump_grid: args.jump_grid.clone(),
        delta_prime: args.delta_prime,
        ..common_layer(&args.common)?
    };
    let layer = resolve(flags, &args.common)?;
    let params = layer.detector_params()?;
    let est = params.estimator_config(1)?;
    let ns = parse_n_grid(layer.n_grid.as_deref().unwrap_or(DEFAULT_N_GRID))?;
    let jumps = parse_grid(layer.jump_grid.as_deref().unwrap_or(DEFAULT_JUMP_GRID))?;
    let mut template = DelayQuery::new(ns[0], jumps[0], est.clone());
    template.fpr_delta = params.delta;
    if let Some(dp) = layer.delta_prime {
        template.delta_prime = dp;
    }
    template.validate()?;
    let cells = heatmap(&ns, &jumps, &template)?;
    let header = config_line(&HeatmapConfig {
        command: "delay-heatmap",
        g: est.g_diam(),
        sigma: est.sigma(),
        lambda: est.lambda(),
        regime: est.regime(),
        delta: template.fpr_delta,
        delta_prime: template.delta_prime,
        n_grid: &ns,
        jump_grid: &jumps,
    });
    emit(layer.out.as_deref(), &format!("{header}{}", heatmap_csv(&ns, &jumps, &cells)))
}

fn list_scenarios() {
    println!("name,family,dim,segments,horizon,change_points");
    for (name, s) in scenario_catalog() {
        let cps: Vec<String> = s.change_points().iter().map(u64::to_string).collect();
        println!(
            "{name},{},{},{},{},{}",
            serde_json::to_value(s.family).expect("family serializes").as_str().unwrap_or("?"),
            s.dim,
            s.segments.len(),
            s.horizon(),
            cps.join(" ")
        );
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Detect(a) => detect(a),
        Command::DelayHeatmap(a) => delay_heatmap(a),
        Command::ListScenarios => {
            list_scenarios();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
