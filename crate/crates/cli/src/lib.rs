//! Command-line front end: simulate skeletons, run cost statistics and
//! sweeps, and compute transported CIR bounds, emitting CSV/JSON for
//! external plotting.
//!
//! Exit codes: 0 on success, 2 on configuration/validation failure, 3 on
//! I/O failure. Every command is deterministic given `(seed, config)`.

pub mod io;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use bessel_skeleton::sampling::RngStream;
use bessel_skeleton::skeletons::{bessel_skeleton_integer, bessel_skeleton_noninteger};
use bessel_skeleton::special::Quadrature;
use bessel_skeleton::statistics::{
    optimal_wi, run_cost_experiment, sweep, CostModel, ExperimentConfig, GeneratorSpec,
    SweepAxis, SweepConfig,
};
use bessel_skeleton::transforms::{cir_transform, precision_variable, transported_bounds, CirParams};
use bessel_skeleton::{BesselSpec, PathSkeleton, WeightPair};

use crate::io::{SkeletonMeta, TransformDoc};

/// Default seed, overridable with `--seed`.
pub const DEFAULT_SEED: u64 = 0xB355E1;

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration; maps to exit code 2.
    Config(String),
    /// Filesystem failure; maps to exit code 3.
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(err: impl std::fmt::Display) -> Self {
        CliError::Io(err.to_string())
    }
}

impl From<bessel_skeleton::Error> for CliError {
    fn from(e: bessel_skeleton::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "skeleton",
    about = "Uniform-accuracy Brownian/Bessel path skeletons by spheroid exit times",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one skeleton and write its points.
    Simulate(SimulateArgs),
    /// Monte Carlo summary of the number of skeleton points.
    Stats(StatsArgs),
    /// One stats row per grid point along a chosen axis.
    Sweep(SweepArgs),
    /// Transported almost-sure bounds for a CIR model.
    Transform(TransformArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// Integer Bessel dimension.
    Dimension,
    /// Inverse squared accuracy 1/eps^2.
    #[value(name = "inv_eps2", alias = "inv-eps2")]
    InvEps2,
    /// Integer-side weight of the non-integer construction.
    Wi,
}

/// Flags shared by every subcommand. Values omitted on the command line
/// fall back to the JSON config file (`--config`), then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Bessel dimension (integer-valued literals select the
    /// integer-dimension algorithm).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Target uniform accuracy.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Start value of the process.
    #[arg(long)]
    pub y0: Option<f64>,
    /// Time horizon (observation horizon for `transform`).
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Monte Carlo repetitions.
    #[arg(long)]
    pub reps: Option<u64>,
    /// RNG seed; repetition k runs on stream (seed, k).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Integer-side weight for non-integer dimensions (default: the
    /// bound-minimizing choice).
    #[arg(long)]
    pub wi: Option<f64>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON file supplying any of the flags of this command.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Histogram bin count (Freedman-Diaconis when omitted).
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Sweep axis.
    #[arg(long, value_enum)]
    pub axis: Option<Axis>,
    /// Grid: comma-separated values, or an inclusive integer range `a..b`.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// CIR mean-reversion speed.
    #[arg(long)]
    pub k: Option<f64>,
    /// CIR long-run level.
    #[arg(long)]
    pub theta: Option<f64>,
    /// CIR volatility.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// CIR start value.
    #[arg(long)]
    pub x0: Option<f64>,
}

/// JSON mirror of the flags, used by `--config`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub y0: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub wi: Option<f64>,
    pub bins: Option<usize>,
    pub axis: Option<String>,
    pub grid: Option<String>,
    pub k: Option<f64>,
    pub theta: Option<f64>,
    pub sigma: Option<f64>,
    pub x0: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

impl FileConfig {
    fn load(path: Option<&Path>, command: &str) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(CliError::io)?;
        let cfg: FileConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("config file {}: {e}", path.display())))?;
        if let Some(cmd) = &cfg.command {
            if cmd != command {
                return Err(CliError::config(format!(
                    "config file is for command {cmd:?}, invoked as {command:?}"
                )));
            }
        }
        Ok(cfg)
    }

    fn format(&self) -> Result<Option<Format>, CliError> {
        match self.format.as_deref() {
            None => Ok(None),
            Some("csv") => Ok(Some(Format::Csv)),
            Some("json") => Ok(Some(Format::Json)),
            Some(other) => Err(CliError::config(format!("unknown format {other:?}"))),
        }
    }

    fn axis(&self) -> Result<Option<Axis>, CliError> {
        match self.axis.as_deref() {
            None => Ok(None),
            Some("dimension") => Ok(Some(Axis::Dimension)),
            Some("inv_eps2") => Ok(Some(Axis::InvEps2)),
            Some("wi") => Ok(Some(Axis::Wi)),
            Some(other) => Err(CliError::config(format!("unknown axis {other:?}"))),
        }
    }
}

fn need<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::config(format!("missing required flag {flag}")))
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        None => Ok(Box::new(BufWriter::new(std::io::stdout()))),
        Some(p) => {
            let f = File::create(p)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

/// Generator selection shared by the commands: an exactly-integer `delta`
/// literal declares the integer-dimension algorithm.
fn build_generator(
    delta: f64,
    eps: f64,
    y0: f64,
    wi: Option<f64>,
) -> Result<(GeneratorSpec, Option<WeightPair>), CliError> {
    if delta.fract() == 0.0 {
        let spec = BesselSpec::new(delta, y0, eps, true)?;
        Ok((GeneratorSpec::Integer(spec), None))
    } else {
        let spec = BesselSpec::new(delta, y0, eps, false)?;
        let wi = match wi {
            Some(v) => v,
            None => optimal_wi(delta)?,
        };
        let weights = WeightPair::new(delta, wi, eps)?;
        Ok((
            GeneratorSpec::NonInteger(spec, weights),
            Some(weights),
        ))
    }
}

fn generate_skeleton(
    generator: &GeneratorSpec,
    horizon: f64,
    seed: u64,
) -> Result<(PathSkeleton, Option<Vec<bessel_skeleton::skeletons::StepRecord>>), CliError> {
    let mut stream = RngStream::new(seed, 0);
    match generator {
        GeneratorSpec::Integer(spec) => {
            let skel = bessel_skeleton_integer(&mut stream, spec, horizon)?;
            Ok((skel, None))
        }
        GeneratorSpec::NonInteger(spec, weights) => {
            let (skel, records) = bessel_skeleton_noninteger(&mut stream, spec, weights, horizon)?;
            Ok((skel, Some(records)))
        }
        GeneratorSpec::Brownian { .. } => Err(CliError::config(
            "the CLI drives Bessel skeletons; dimension 1 covers the Brownian cost".to_string(),
        )),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let c = &args.common;
    let file = FileConfig::load(c.config.as_deref(), "simulate")?;
    let delta = need(c.delta.or(file.delta), "--delta")?;
    let eps = need(c.eps.or(file.eps), "--eps")?;
    let y0 = c.y0.or(file.y0).unwrap_or(0.5);
    let horizon = c.t.or(file.t).unwrap_or(1.0);
    let seed = c.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let format = match c.format.or(file.format()?) {
        Some(f) => f,
        None => Format::Csv,
    };
    let (generator, weights) = build_generator(delta, eps, y0, c.wi.or(file.wi))?;
    let (skel, records) = generate_skeleton(&generator, horizon, seed)?;
    let meta = SkeletonMeta::of(
        &skel,
        weights.map(|w| w.wi()),
        weights.map(|w| w.wf()),
        seed,
    );
    let out_path = c.out.clone().or(file.out);
    let mut out = open_out(out_path.as_deref())?;
    let res = match format {
        Format::Csv => io::write_skeleton_csv(&mut *out, &meta, &skel, records.as_deref()),
        Format::Json => io::write_skeleton_json(&mut *out, &meta, &skel, records.as_deref()),
    };
    res.and_then(|()| out.flush()).map_err(CliError::io)
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let c = &args.common;
    let file = FileConfig::load(c.config.as_deref(), "stats")?;
    let delta = need(c.delta.or(file.delta), "--delta")?;
    let eps = need(c.eps.or(file.eps), "--eps")?;
    let y0 = c.y0.or(file.y0).unwrap_or(0.5);
    let horizon = c.t.or(file.t).unwrap_or(1.0);
    let seed = c.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let reps = c.reps.or(file.reps).unwrap_or(1000);
    let format = match c.format.or(file.format()?) {
        Some(f) => f,
        None => Format::Json,
    };
    let (generator, _) = build_generator(delta, eps, y0, c.wi.or(file.wi))?;
    let cfg = ExperimentConfig {
        generator,
        horizon,
        reps,
        seed,
        bins: args.bins.or(file.bins),
    };
    let stats = run_cost_experiment(&cfg)?;
    let model = CostModel::for_generator(&cfg.generator, &Quadrature::with_rel_tol(1e-8))?;
    let doc = io::stats_doc(&stats, model.limit_eps2_en * horizon, model.sigma2);
    let out_path = c.out.clone().or(file.out);
    let mut out = open_out(out_path.as_deref())?;
    let res = match format {
        Format::Json => io::write_stats_json(&mut *out, &doc),
        Format::Csv => io::write_histogram_csv(&mut *out, &stats.histogram),
    };
    res.and_then(|()| out.flush()).map_err(CliError::io)
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo
            .trim()
            .parse()
            .map_err(|e| CliError::config(format!("grid range start {lo:?}: {e}")))?;
        let hi: u64 = hi
            .trim()
            .parse()
            .map_err(|e| CliError::config(format!("grid range end {hi:?}: {e}")))?;
        if hi < lo {
            return Err(CliError::config(format!("empty grid range {text:?}")));
        }
        return Ok((lo..=hi).map(|v| v as f64).collect());
    }
    text.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| CliError::config(format!("grid value {f:?}: {e}")))
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let c = &args.common;
    let file = FileConfig::load(c.config.as_deref(), "sweep")?;
    let axis = need(args.axis.or(file.axis()?), "--axis")?;
    let grid = parse_grid(&need(args.grid.or(file.grid.clone()), "--grid")?)?;
    if grid.is_empty() {
        return Err(CliError::config("sweep grid must be nonempty".to_string()));
    }
    let eps = need(c.eps.or(file.eps), "--eps")?;
    let y0 = c.y0.or(file.y0).unwrap_or(0.5);
    let horizon = c.t.or(file.t).unwrap_or(1.0);
    let seed = c.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let reps = c.reps.or(file.reps).unwrap_or(500);
    let sweep_axis = match axis {
        Axis::Dimension => {
            let mut dims = Vec::with_capacity(grid.len());
            for v in &grid {
                if v.fract() != 0.0 || *v < 1.0 {
                    return Err(CliError::config(format!(
                        "dimension grid values must be positive integers, got {v}"
                    )));
                }
                dims.push(*v as u32);
            }
            SweepAxis::Dimension(dims)
        }
        Axis::InvEps2 => SweepAxis::InvEps2(grid),
        Axis::Wi => SweepAxis::Wi(grid),
    };
    // The base generator: dimension sweeps pivot on an integer spec (the
    // --delta flag is then just the placeholder dimension), the others keep
    // the configured dimension.
    let base_delta = match (&sweep_axis, c.delta.or(file.delta)) {
        (SweepAxis::Dimension(dims), _) => f64::from(dims[0]),
        (_, d) => need(d, "--delta")?,
    };
    let (generator, _) = build_generator(base_delta, eps, y0, c.wi.or(file.wi))?;
    let cfg = SweepConfig {
        axis: sweep_axis,
        base: ExperimentConfig {
            generator,
            horizon,
            reps,
            seed,
            bins: None,
        },
        quad: Quadrature::with_rel_tol(1e-8),
    };
    let table = sweep(&cfg)?;
    let out_path = c.out.clone().or(file.out);
    let mut out = open_out(out_path.as_deref())?;
    io::write_sweep_csv(&mut *out, &table)
        .and_then(|()| out.flush())
        .map_err(CliError::io)
}

fn cmd_transform(args: TransformArgs) -> Result<(), CliError> {
    let c = &args.common;
    let file = FileConfig::load(c.config.as_deref(), "transform")?;
    let k = need(args.k.or(file.k), "--k")?;
    let theta = need(args.theta.or(file.theta), "--theta")?;
    let sigma = need(args.sigma.or(file.sigma), "--sigma")?;
    let x0 = need(args.x0.or(file.x0), "--x0")?;
    let eps = need(c.eps.or(file.eps), "--eps")?;
    let t_obs = c.t.or(file.t).unwrap_or(2.0);
    let seed = c.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let format = match c.format.or(file.format()?) {
        Some(f) => f,
        None => Format::Csv,
    };
    let params = CirParams::new(k, theta, sigma, x0)?;
    let spec = cir_transform(&params)?;
    let horizon = spec.time_change(t_obs);
    let (generator, _) = build_generator(spec.delta(), eps, spec.bessel_start(), c.wi.or(file.wi))?;
    let (skel, _) = generate_skeleton(&generator, horizon, seed)?;
    let bounds = transported_bounds(&spec, &skel, t_obs)?;
    let precision = precision_variable(&spec, &skel, t_obs)?;
    let doc = TransformDoc {
        points: &bounds,
        p_eps: precision.from_definition,
        p_eps_explicit: precision.explicit,
    };
    let out_path = c.out.clone().or(file.out);
    let mut out = open_out(out_path.as_deref())?;
    let res = match format {
        Format::Csv => io::write_transform_csv(&mut *out, &doc),
        Format::Json => io::write_transform_json(&mut *out, &doc),
    };
    res.and_then(|()| out.flush()).map_err(CliError::io)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Transform(args) => cmd_transform(args),
    }
}

/// Full CLI entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 2 };
        }
    };
    if let Ok(v) = std::env::var("SKELETON_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                bessel_skeleton::configure_threads(n);
            }
            _ => {
                eprintln!("config error: SKELETON_THREADS must be a positive integer, got {v:?}");
                return 2;
            }
        }
    }
    match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            2
        }
        Err(CliError::Io(msg)) => {
            eprintln!("io error: {msg}");
            3
        }
    }
}
