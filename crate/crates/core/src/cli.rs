//! Command-line front end: argument parsing, config files, output files and
//! run manifests.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::curve::{dist_rho, dist_sup, map_t, Curve};
use crate::error::{Error, Result};
use crate::estimators::{self as est, Runner};
use crate::green::{green_disk, origin_cell_mass_bound, riemann_sum, Region, SleParams};
use crate::lattice::{grid_approximation, DomainSpec};
use crate::loewner::{sample_sle_trace, InverseMethod, Parametrization, StartAngle, TraceOptions};
use crate::measure::{levy_prokhorov, OccupationMeasure, TestFamily};
use crate::walk::{LerwSampler, LerwTarget};

const LERW_SAMPLE_TAG: u64 = 12;
const SLE_SAMPLE_TAG: u64 = 13;

const EXIT_USAGE: i32 = 2;
const EXIT_PRECONDITION: i32 = 3;
const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser, Serialize)]
#[command(name = "lerwlab", version, about = "Monte Carlo experiments on loop-erased random walk and radial SLE")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Global {
    /// Master seed; replica i of every experiment uses a stream derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of samples (each command has its own default).
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Worker threads. Affects wall time only.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Output file; the manifest is written to `<out>.manifest.json`.
    /// Without it results go to stdout and no manifest is written.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Sample LERW paths to the circle of radius n (lattice points, exit point first).
    LerwSample {
        #[arg(long)]
        n: u32,
    },
    /// Sample one radial SLE trace as curve JSON.
    SleSample(SleSampleArgs),
    /// Estimate E[M_n] and the quantiles of M_n / E[M_n].
    EstimateMn {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
    },
    /// Fit the growth exponent of E[M_n] over several scales.
    FitExponent {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
    },
    /// Edge-visit probabilities of the LERW against the Green's function.
    EdgeProb(EdgeProbArgs),
    /// Conditional occupation of B(z, eps) given that the LERW meets it.
    Occupation(OccupationArgs),
    /// Escape probabilities Es(n) (m = 0) and Es(m, n).
    Es {
        #[arg(long)]
        n: u32,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        m: Vec<u32>,
    },
    /// Probability that the rescaled LERW (or an SLE trace) meets B(z, eps).
    HitProb(HitProbArgs),
    /// Chi-square test of the domain Markov property in a square.
    DomainMarkov(DomainMarkovArgs),
    /// Sample means of the SLE martingale observable over time.
    MartingaleCheck(MartingaleArgs),
    /// SLE Green's function on the disk: `green [eval]` or `green integrate`.
    Green(GreenArgs),
    /// Distances between two curves given as JSON files.
    Metrics(MetricsArgs),
    /// Lévy–Prokhorov distance between two measures given as CSV files.
    LpDistance(LpArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ClockArg {
    Capacity,
    FiniteLifetime,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum InverseArg {
    BackwardFlow,
    Composition,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SpeedArg {
    Empirical,
    Growth,
}

impl From<SpeedArg> for est::SpeedChoice {
    fn from(s: SpeedArg) -> Self {
        match s {
            SpeedArg::Empirical => est::SpeedChoice::Empirical,
            SpeedArg::Growth => est::SpeedChoice::Growth,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ComparatorArg {
    SlitDomain,
    FullDomain,
}

#[derive(Debug, Args, Serialize)]
struct SleSampleArgs {
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    /// Capacity time horizon.
    #[arg(long = "T", default_value_t = 1.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Index of the sample within the seed's stream family.
    #[arg(long, default_value_t = 0)]
    index: u64,
    #[arg(long, value_enum, default_value_t = ClockArg::FiniteLifetime)]
    clock: ClockArg,
    #[arg(long, value_enum, default_value_t = InverseArg::BackwardFlow)]
    inverse: InverseArg,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long, default_value_t = crate::loewner::DEFAULT_TRACE_OFFSET)]
    offset: f64,
    /// Fixed start angle in radians instead of a uniform one.
    #[arg(long)]
    angle: Option<f64>,
    /// Also run the other inverse method and report the disagreement.
    #[arg(long)]
    cross_check: bool,
}

#[derive(Debug, Args, Serialize)]
struct EdgeProbArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, value_delimiter = ',', num_args = 1, default_value = "0.2,0.8")]
    annulus: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7")]
    bins: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    half_width: f64,
    #[arg(long, value_enum, default_value_t = SpeedArg::Empirical)]
    speed: SpeedArg,
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    /// Write one row per edge instead of one row per bin.
    #[arg(long)]
    edges: bool,
}

#[derive(Debug, Args, Serialize)]
struct OccupationArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, value_parser = parse_point)]
    z: [f64; 2],
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    /// Samples for the companion estimate of E[M_{eps n}].
    #[arg(long, default_value_t = 10_000)]
    mn_samples: u64,
    #[arg(long, value_enum, default_value_t = SpeedArg::Empirical)]
    speed: SpeedArg,
}

#[derive(Debug, Args, Serialize)]
struct HitProbArgs {
    #[arg(long, value_delimiter = ',', required_unless_present = "sle")]
    n: Vec<u32>,
    #[arg(long, value_parser = parse_point)]
    z: [f64; 2],
    #[arg(long)]
    eps: f64,
    /// Use radial SLE traces instead of LERW.
    #[arg(long)]
    sle: bool,
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    #[arg(long = "T", default_value_t = 4.0)]
    t_max: f64,
    #[arg(long, default_value_t = 2e-3)]
    dt: f64,
    #[arg(long, default_value_t = 5)]
    stride: usize,
}

#[derive(Debug, Args, Serialize)]
struct DomainMarkovArgs {
    /// Side of the centered square domain, in lattice units.
    #[arg(long, default_value_t = 4.0)]
    side: f64,
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long, value_enum, default_value_t = ComparatorArg::SlitDomain)]
    comparator: ComparatorArg,
}

#[derive(Debug, Args, Serialize)]
struct MartingaleArgs {
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    #[arg(long, value_parser = parse_point)]
    z: [f64; 2],
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    times: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Fixed start angle in radians instead of a uniform one.
    #[arg(long)]
    angle: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct GreenArgs {
    #[command(subcommand)]
    mode: Option<GreenMode>,
    #[command(flatten)]
    eval: GreenEvalArgs,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GreenMode {
    /// G(z) = |z|^{d-2}.
    Eval(GreenEvalArgs),
    /// Riemann sum of G over an annulus on the lattice of scale n.
    Integrate {
        #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
        annulus: Vec<f64>,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 2.0)]
        kappa: f64,
    },
}

#[derive(Debug, Clone, Args, Serialize)]
struct GreenEvalArgs {
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    #[arg(long, value_parser = parse_point)]
    z: Option<[f64; 2]>,
}

#[derive(Debug, Args, Serialize)]
struct MetricsArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Longest segment atom of the occupation measures.
    #[arg(long, default_value_t = 0.01)]
    resolution: f64,
    /// Dyadic level of the Lévy–Prokhorov test family.
    #[arg(long, default_value_t = 7)]
    level: u32,
}

#[derive(Debug, Args, Serialize)]
struct LpArgs {
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    #[arg(long, default_value_t = 7)]
    level: u32,
}

fn parse_point(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => Ok([x.parse().map_err(|e| format!("{e}"))?, y.parse().map_err(|e| format!("{e}"))?]),
        _ => Err(format!("expected x,y, got {s:?}")),
    }
}

enum Body {
    Csv(String),
    Json(String),
}

struct Outcome {
    body: Body,
    summary: Value,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    argv: Vec<String>,
    config: &'a Cli,
    seed: u64,
    workers: usize,
    version: String,
    started_unix: f64,
    finished_unix: f64,
    wall_seconds: f64,
    outputs: Vec<String>,
    summary: Value,
}

fn csv_of<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn csv_outcome<R: Serialize>(rows: &[R]) -> Result<Outcome> {
    Ok(Outcome { body: Body::Csv(csv_of(rows)?), summary: Value::Null })
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn version() -> String {
    match option_env!("LERWLAB_GIT_DESCRIBE") {
        Some(g) => format!("{} ({g})", env!("CARGO_PKG_VERSION")),
        None => env!("CARGO_PKG_VERSION").to_string(),
    }
}

fn usage_error(message: impl std::fmt::Display) -> i32 {
    eprintln!("{}", json!({ "error": "Usage", "message": message.to_string() }));
    EXIT_USAGE
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 success, 2 usage error, 3 precondition violation, 4 internal
/// defect. Errors are reported on stderr as one JSON object.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(msg) => return usage_error(msg),
    };
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            return usage_error(e.render());
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => return usage_error(e.render()),
    };
    match execute(&cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            if e.is_internal() {
                EXIT_INTERNAL
            } else {
                EXIT_PRECONDITION
            }
        }
    }
}

/// Inserts the entries of the `--config` JSON object as flags right after
/// the subcommand, skipping any flag the command line sets itself.
fn expand_config(argv: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = Some(args.get(i + 1).cloned().ok_or("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let obj: serde_json::Map<String, Value> = match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => m,
        Ok(_) => return Err(format!("config {path} must hold a JSON object")),
        Err(e) => return Err(format!("config {path} is not valid JSON: {e}")),
    };
    let given: BTreeSet<&str> =
        args.iter().filter_map(|a| a.strip_prefix("--")).map(|a| a.split('=').next().unwrap_or(a)).collect();
    let mut extra: Vec<String> = Vec::new();
    for (key, value) in &obj {
        let flag = key.replace('_', "-");
        if flag == "config" || given.contains(flag.as_str()) {
            continue;
        }
        let text = match value {
            Value::Bool(true) => {
                extra.push(format!("--{flag}"));
                continue;
            }
            Value::Bool(false) | Value::Null => continue,
            Value::Number(x) => x.to_string(),
            Value::String(s) => s.clone(),
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::Number(x) => Ok(x.to_string()),
                    Value::String(s) => Ok(s.clone()),
                    _ => Err(format!("config entry {key:?} must be a flat list")),
                })
                .collect::<std::result::Result<Vec<_>, _>>()?
                .join(","),
            Value::Object(_) => return Err(format!("config entry {key:?} cannot be an object")),
        };
        extra.push(format!("--{flag}"));
        extra.push(text);
    }
    let at = subcommand_end(&args);
    let mut out = argv;
    out.splice(at..at, extra.into_iter().map(OsString::from));
    Ok(out)
}

/// Position just after the (possibly nested) subcommand name.
fn subcommand_end(args: &[String]) -> usize {
    const VALUED: [&str; 5] = ["--seed", "--samples", "--workers", "--out", "--config"];
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if VALUED.contains(&a.as_str()) {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            if a == "green" && matches!(args.get(i + 1).map(String::as_str), Some("eval" | "integrate")) {
                return i + 2;
            }
            return i + 1;
        }
    }
    args.len()
}

fn execute(cli: &Cli, argv: &[OsString]) -> Result<()> {
    let started = Instant::now();
    let started_unix = unix_now();
    let g = &cli.global;
    let runner = Runner::new(g.seed, g.workers)?;
    let outcome = dispatch(&cli.command, g, &runner)?;
    let text = match &outcome.body {
        Body::Csv(s) | Body::Json(s) => s,
    };
    match &g.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if matches!(outcome.body, Body::Json(_)) {
                writeln!(stdout)?;
            }
        }
        Some(path) => {
            fs::write(path, text)?;
            let manifest = RunManifest {
                command: command_name(&cli.command),
                argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
                config: cli,
                seed: g.seed,
                workers: g.workers,
                version: version(),
                started_unix,
                finished_unix: unix_now(),
                wall_seconds: started.elapsed().as_secs_f64(),
                outputs: vec![path.display().to_string()],
                summary: outcome.summary,
            };
            fs::write(manifest_path(path), serde_json::to_string_pretty(&manifest)?)?;
        }
    }
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::LerwSample { .. } => "lerw-sample",
        Command::SleSample(_) => "sle-sample",
        Command::EstimateMn { .. } => "estimate-mn",
        Command::FitExponent { .. } => "fit-exponent",
        Command::EdgeProb(_) => "edge-prob",
        Command::Occupation(_) => "occupation",
        Command::Es { .. } => "es",
        Command::HitProb(_) => "hit-prob",
        Command::DomainMarkov(_) => "domain-markov",
        Command::MartingaleCheck(_) => "martingale-check",
        Command::Green(_) => "green",
        Command::Metrics(_) => "metrics",
        Command::LpDistance(_) => "lp-distance",
    }
}

fn start_angle(angle: Option<f64>) -> StartAngle {
    angle.map_or(StartAngle::Uniform, |angle| StartAngle::Fixed { angle })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn dispatch(cmd: &Command, g: &Global, runner: &Runner) -> Result<Outcome> {
    let samples = |default: u64| g.samples.unwrap_or(default);
    let seed = g.seed;
    match cmd {
        Command::LerwSample { n } => {
            #[derive(Serialize)]
            struct Row {
                sample: u64,
                step: usize,
                x: i32,
                y: i32,
            }
            let count = samples(1);
            let paths = runner.chunks(count, |range| {
                let mut s = LerwSampler::new(LerwTarget::Ball(*n))?;
                range
                    .map(|i| {
                        s.run(runner.stream(LERW_SAMPLE_TAG, i))?;
                        Ok(s.lerw().to_vec())
                    })
                    .collect()
            })?;
            let rows: Vec<Row> = paths
                .iter()
                .enumerate()
                .flat_map(|(i, p)| {
                    p.iter().enumerate().map(move |(k, q)| Row { sample: i as u64, step: k, x: q.x, y: q.y })
                })
                .collect();
            let steps: Vec<usize> = paths.iter().map(|p| p.len() - 1).collect();
            Ok(Outcome { body: Body::Csv(csv_of(&rows)?), summary: json!({ "n": n, "M_n": steps }) })
        }
        Command::SleSample(a) => {
            let opts = TraceOptions {
                offset: a.offset,
                parametrization: match a.clock {
                    ClockArg::Capacity => Parametrization::Capacity,
                    ClockArg::FiniteLifetime => Parametrization::FiniteLifetime,
                },
                inverse: match a.inverse {
                    InverseArg::BackwardFlow => InverseMethod::BackwardFlow,
                    InverseArg::Composition => InverseMethod::Composition,
                },
                start: start_angle(a.angle),
                stride: a.stride,
                cross_check: a.cross_check,
            };
            let tr = sample_sle_trace(a.kappa, a.t_max, a.dt, runner.stream(SLE_SAMPLE_TAG, a.index), &opts)?;
            let summary = json!({
                "kappa": tr.kappa,
                "dt": tr.dt,
                "t_max": tr.t_max,
                "parametrization": tr.parametrization,
                "inverse": tr.inverse,
                "offset": tr.offset,
                "inverse_discrepancy": tr.inverse_discrepancy,
                "flagged": tr.flagged(),
            });
            Ok(Outcome { body: Body::Json(serde_json::to_string(&tr.curve)?), summary })
        }
        Command::EstimateMn { n } => {
            #[derive(Serialize)]
            struct Row {
                n: u32,
                estimate: f64,
                stderr: f64,
                count: u64,
                seed: u64,
                q50: f64,
                q90: f64,
                q99: f64,
            }
            let mut rows = Vec::new();
            for &n in n {
                let e = est::estimate_mn(n, samples(1000), runner)?;
                let q = |p: f64| e.quantiles.iter().find(|x| x.0 == p).map_or(f64::NAN, |x| x.1);
                rows.push(Row {
                    n,
                    estimate: e.report.estimate,
                    stderr: e.report.stderr,
                    count: e.report.count,
                    seed: e.report.seed,
                    q50: q(0.5),
                    q90: q(0.9),
                    q99: q(0.99),
                });
            }
            csv_outcome(&rows)
        }
        Command::FitExponent { n } => {
            #[derive(Serialize)]
            struct Row {
                n: u32,
                estimate: f64,
                stderr: f64,
                count: u64,
                seed: u64,
                residual: f64,
                slope: f64,
                half_width: f64,
            }
            let reports: Vec<est::EstimateReport> =
                n.iter().map(|&n| est::estimate_mn(n, samples(1000), runner).map(|e| e.report)).collect::<Result<_>>()?;
            let fit = est::fit_growth_exponent(n, &reports, seed)?;
            let rows: Vec<Row> = n
                .iter()
                .zip(&reports)
                .zip(&fit.residuals)
                .map(|((&n, r), &res)| Row {
                    n,
                    estimate: r.estimate,
                    stderr: r.stderr,
                    count: r.count,
                    seed: r.seed,
                    residual: res,
                    slope: fit.slope,
                    half_width: fit.half_width,
                })
                .collect();
            Ok(Outcome { body: Body::Csv(csv_of(&rows)?), summary: serde_json::to_value(&fit)? })
        }
        Command::EdgeProb(a) => {
            let [inner, outer] = a.annulus[..] else {
                return Err(Error::InvalidInput("annulus takes two radii a,b".into()));
            };
            let cfg = est::EdgeConfig {
                n: a.n,
                samples: samples(10_000),
                annulus: (inner, outer),
                bins: a.bins.clone(),
                bin_half_width: a.half_width,
                speed: a.speed.into(),
                kappa: a.kappa,
            };
            let f = est::estimate_edge_probability(&cfg, runner)?;
            let summary = json!({
                "n": f.n, "samples": f.samples, "seed": f.seed, "speed": f.speed, "c_n": f.c_n,
                "mean_steps": f.mean_steps, "total_steps": f.total_steps, "total_visits": f.total_visits,
            });
            let body = if a.edges { csv_of(&f.rows)? } else { csv_of(&f.bins)? };
            Ok(Outcome { body: Body::Csv(body), summary })
        }
        Command::Occupation(a) => {
            let mut rows = Vec::new();
            for &eps in &a.eps {
                let cfg = est::OccupationConfig {
                    z: a.z,
                    eps,
                    n: a.n,
                    samples: samples(10_000),
                    mn_samples: a.mn_samples,
                    speed: a.speed.into(),
                };
                rows.push(est::estimate_conditional_occupation(&cfg, runner)?);
            }
            #[derive(Serialize)]
            struct Row {
                n: u32,
                eps: f64,
                z_x: f64,
                z_y: f64,
                estimate: f64,
                stderr: f64,
                count: u64,
                seed: u64,
                hits: u64,
                hit_rate: f64,
                mean_mass: f64,
                eps_n: u32,
                mean_m_eps_n: f64,
                mean_m_n: f64,
                ratio_steps_diagnostic: f64,
                ratio_scaled_diagnostic: f64,
                bound_quotient: f64,
            }
            let rows: Vec<Row> = rows
                .into_iter()
                .map(|e| Row {
                    n: e.n,
                    eps: e.eps,
                    z_x: e.z[0],
                    z_y: e.z[1],
                    estimate: e.mean_steps,
                    stderr: e.mean_steps_stderr,
                    count: e.samples,
                    seed: e.seed,
                    hits: e.hits,
                    hit_rate: e.hit_rate,
                    mean_mass: e.mean_mass,
                    eps_n: e.eps_n,
                    mean_m_eps_n: e.mean_m_eps_n,
                    mean_m_n: e.mean_m_n,
                    ratio_steps_diagnostic: e.ratio_steps,
                    ratio_scaled_diagnostic: e.ratio_scaled,
                    bound_quotient: e.bound_quotient,
                })
                .collect();
            csv_outcome(&rows)
        }
        Command::Es { n, m } => {
            #[derive(Serialize)]
            struct Row {
                m: u32,
                n: u32,
                estimate: f64,
                stderr: f64,
                count: u64,
                seed: u64,
            }
            let reps = est::estimate_es_profile(m, *n, samples(10_000), runner)?;
            let rows: Vec<Row> = m
                .iter()
                .zip(reps)
                .map(|(&m, r)| Row { m, n: *n, estimate: r.estimate, stderr: r.stderr, count: r.count, seed: r.seed })
                .collect();
            csv_outcome(&rows)
        }
        Command::HitProb(a) => {
            #[derive(Serialize)]
            struct Row {
                model: &'static str,
                n: Option<u32>,
                z_x: f64,
                z_y: f64,
                eps: f64,
                estimate: f64,
                stderr: f64,
                count: u64,
                seed: u64,
            }
            let row = |model, n, r: est::EstimateReport| Row {
                model,
                n,
                z_x: a.z[0],
                z_y: a.z[1],
                eps: a.eps,
                estimate: r.estimate,
                stderr: r.stderr,
                count: r.count,
                seed: r.seed,
            };
            let mut rows = Vec::new();
            for &n in &a.n {
                rows.push(row("lerw", Some(n), est::estimate_hit_probability(a.z, a.eps, n, samples(10_000), runner)?));
            }
            if a.sle {
                let cfg = est::SleHitConfig { kappa: a.kappa, t_max: a.t_max, dt: a.dt, stride: a.stride };
                rows.push(row("sle", None, est::estimate_sle_hit_probability(a.z, a.eps, samples(10_000), &cfg, runner)?));
            }
            csv_outcome(&rows)
        }
        Command::DomainMarkov(a) => {
            let dom = grid_approximation(&DomainSpec::Square { side: a.side, center: [0.0, 0.0] }, 1)?;
            let comparator = match a.comparator {
                ComparatorArg::SlitDomain => est::Comparator::SlitDomain,
                ComparatorArg::FullDomain => est::Comparator::FullDomain,
            };
            let r = est::domain_markov_test(&dom, a.j, samples(100_000), comparator, runner)?;
            #[derive(Serialize)]
            struct Row {
                j: usize,
                comparator: est::Comparator,
                prefix: String,
                prefix_count: u64,
                samples: u64,
                seed: u64,
                comparator_accepted: u64,
                outcomes: usize,
                statistic: f64,
                dof: usize,
                p_value: f64,
            }
            let prefix = r.prefix.iter().map(|p| format!("{} {}", p.x, p.y)).collect::<Vec<_>>().join(";");
            csv_outcome(&[Row {
                j: r.j,
                comparator: r.comparator,
                prefix,
                prefix_count: r.prefix_count,
                samples: r.samples,
                seed,
                comparator_accepted: r.comparator_accepted,
                outcomes: r.outcomes,
                statistic: r.test.statistic,
                dof: r.test.dof,
                p_value: r.p_value,
            }])
        }
        Command::MartingaleCheck(a) => {
            let cfg = est::MartingaleConfig {
                kappa: a.kappa,
                z: a.z,
                times: a.times.clone(),
                dt: a.dt,
                samples: samples(10_000),
                start: start_angle(a.angle),
            };
            let r = est::martingale_check(&cfg, runner)?;
            #[derive(Serialize)]
            struct Row {
                t: f64,
                estimate: f64,
                stderr: f64,
                count: u64,
                seed: u64,
                drift: f64,
                drift_stderr: f64,
                z_score: f64,
            }
            let rows: Vec<Row> = r
                .points
                .iter()
                .map(|p| Row {
                    t: p.t,
                    estimate: p.mean,
                    stderr: p.stderr,
                    count: r.samples,
                    seed: r.seed,
                    drift: p.drift,
                    drift_stderr: p.drift_stderr,
                    z_score: p.z_score,
                })
                .collect();
            let summary = json!({ "initial": r.initial, "swallowed": r.swallowed, "max_drift_score": r.max_drift_score() });
            Ok(Outcome { body: Body::Csv(csv_of(&rows)?), summary })
        }
        Command::Green(a) => match &a.mode {
            None => green_eval(&a.eval),
            Some(GreenMode::Eval(e)) => green_eval(e),
            Some(GreenMode::Integrate { annulus, n, kappa }) => {
                let [inner, outer] = annulus[..] else {
                    return Err(Error::InvalidInput("annulus takes two radii a,b".into()));
                };
                if !(0.0 <= inner && inner < outer && outer <= 1.0) {
                    return Err(Error::InvalidInput(format!("annulus ({inner}, {outer}) must satisfy 0 <= a < b <= 1")));
                }
                let params = SleParams::new(*kappa)?;
                let dom = grid_approximation(&DomainSpec::unit_disk(), *n)?;
                let s = riemann_sum(|z| green_disk(z, params).unwrap_or(0.0), &dom, Region::Annulus { inner, outer });
                let d = params.dimension();
                #[derive(Serialize)]
                struct Row {
                    inner: f64,
                    outer: f64,
                    n: u32,
                    kappa: f64,
                    sum: f64,
                    exact: f64,
                    edges: usize,
                    excluded_edges: usize,
                    excluded_mass_bound: f64,
                }
                csv_outcome(&[Row {
                    inner,
                    outer,
                    n: *n,
                    kappa: *kappa,
                    sum: s.value,
                    exact: 2.0 * std::f64::consts::PI * (outer.powf(d) - inner.powf(d)) / d,
                    edges: s.edges,
                    excluded_edges: s.excluded_edges,
                    excluded_mass_bound: if s.excluded_edges > 0 { origin_cell_mass_bound(*n, params) } else { 0.0 },
                }])
            }
        },
        Command::Metrics(a) => {
            let ga: Curve = read_json(&a.a)?;
            let gb: Curve = read_json(&a.b)?;
            let family = TestFamily::new(a.level)?;
            let rho = dist_rho(&ga, &gb);
            let (_, mu) = map_t(&ga, a.resolution)?;
            let (_, nu) = map_t(&gb, a.resolution)?;
            let lp = levy_prokhorov(&mu, &nu, family);
            #[derive(Serialize)]
            struct Row {
                dist_sup: f64,
                rho: f64,
                rho_error_bound: f64,
                lp_estimate: f64,
                lp_lower: f64,
                lp_upper: f64,
                lp_resolution: f64,
            }
            csv_outcome(&[Row {
                dist_sup: dist_sup(&ga, &gb),
                rho: rho.value,
                rho_error_bound: rho.error_bound,
                lp_estimate: lp.estimate,
                lp_lower: lp.lower,
                lp_upper: lp.upper,
                lp_resolution: lp.resolution,
            }])
        }
        Command::LpDistance(a) => {
            let mu = OccupationMeasure::read_csv(fs::File::open(&a.mu)?)?;
            let nu = OccupationMeasure::read_csv(fs::File::open(&a.nu)?)?;
            let lp = levy_prokhorov(&mu, &nu, TestFamily::new(a.level)?);
            csv_outcome(&[lp])
        }
    }
}

fn green_eval(a: &GreenEvalArgs) -> Result<Outcome> {
    let z = a.z.ok_or_else(|| Error::InvalidInput("green eval needs --z x,y".into()))?;
    let value = green_disk(Complex64::new(z[0], z[1]), SleParams::new(a.kappa)?)?;
    #[derive(Serialize)]
    struct Row {
        z_x: f64,
        z_y: f64,
        kappa: f64,
        green: f64,
    }
    csv_outcome(&[Row { z_x: z[0], z_y: z[1], kappa: a.kappa, green: value }])
}
