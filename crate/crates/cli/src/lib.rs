//! Experiment harness behind the `mts` binary.

pub mod error;
pub mod experiment;
pub mod records;
pub mod seed;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mts_core::benchmarks::BenchmarkReport;
use mts_core::combine::Wiring;
use mts_core::instances::{
    gen_coupon_lb, gen_kserver_line_lb, kserver_config_mts, mixed_predictors, random_lazy_line_kserver, random_mts,
    CouponParams, MetricKind, RandomMtsParams, Sidecar,
};
use mts_core::io::{load_instance, save_instance};
use mts_core::unfair::Subroutine;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use error::{CliError, CliResult};
use experiment::{execute, execute_sweep, parse_wiring, Algo, RunSpec, SweepSpec};
use records::{csv_body, csv_header, TrialRecord};
use verify::{run_suite, Suite};

#[derive(Debug, Parser)]
#[command(name = "mts", version, about = "Learning-augmented metrical task system experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance file with predictors.
    Gen(GenArgs),
    /// Run an algorithm for several seeded trials and write trial rows.
    Run(RunArgs),
    /// Compute offline benchmarks of an instance.
    Bench(BenchArgs),
    /// Run a verification suite; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Run a grid of algorithm configurations.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    /// Coupon-collector lower bound: one static predictor per point.
    Coupon,
    /// Random metric and costs with a mixed predictor family.
    Random,
    /// The line k-server lower bound with two lazy predictors.
    KserverLine,
    /// Random lazy k-server predictors on a line.
    KserverRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricArg {
    Uniform,
    Line,
    Euclidean,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Uniform => MetricKind::Uniform,
            MetricArg::Line => MetricKind::Line,
            MetricArg::Euclidean => MetricKind::Euclidean,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Option<GenKind>,
    /// Number of predictors (points for coupon instances).
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of metric points.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of servers.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    #[arg(long)]
    pub max_cost: Option<f64>,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
    /// JSON file with any of the options above; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenConfig {
    kind: Option<GenKind>,
    ell: Option<usize>,
    #[serde(rename = "T")]
    horizon: Option<usize>,
    alpha: Option<f64>,
    seed: Option<u64>,
    n: Option<usize>,
    k: Option<usize>,
    metric: Option<MetricArg>,
    max_cost: Option<f64>,
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub algo: Option<Algo>,
    #[arg(long)]
    pub subroutine: Option<Subroutine>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_parser = parse_wiring)]
    pub wiring: Option<Wiring>,
    /// Unfairness override.
    #[arg(long)]
    pub r: Option<f64>,
    /// Switch limit of the limited benchmark.
    #[arg(long)]
    pub m: Option<usize>,
    /// Switch price of the priced benchmark.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Instance file; repeat for several instances.
    #[arg(long = "instance")]
    pub instances: Vec<PathBuf>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output; rows are appended when the file already has the header.
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    algo: Option<Algo>,
    subroutine: Option<Subroutine>,
    epsilon: Option<f64>,
    gamma: Option<f64>,
    wiring: Option<Wiring>,
    r: Option<f64>,
    m: Option<usize>,
    rho: Option<f64>,
    #[serde(default)]
    instances: Vec<PathBuf>,
    trials: Option<u64>,
    seed: Option<u64>,
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Switch limits, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    /// Switch prices, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    /// `.csv` writes long-format rows, anything else JSON; stdout by default.
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

fn read_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn require<T>(v: Option<T>, name: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Config(format!("missing --{name}")))
}

fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("meta.json")
}

pub fn cmd_gen(args: GenArgs) -> CliResult<String> {
    let cfg: GenConfig = read_config(args.config.as_deref())?;
    let kind = require(args.kind.or(cfg.kind), "kind")?;
    let output = require(args.output.or(cfg.output), "output")?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let horizon = require(args.horizon.or(cfg.horizon), "T")?;
    let ell = args.ell.or(cfg.ell);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (inst, traces, params, sigma) = match kind {
        GenKind::Coupon => {
            let p = CouponParams {
                ell: require(ell, "ell")?,
                horizon,
                alpha: require(args.alpha.or(cfg.alpha), "alpha")?,
                seed,
            };
            let c = gen_coupon_lb(p)?;
            (c.inst, c.traces, serde_json::to_value(p)?, Some(c.sigma))
        }
        GenKind::Random => {
            let p = RandomMtsParams {
                n: args.n.or(cfg.n).unwrap_or(8),
                horizon,
                metric: args.metric.or(cfg.metric).unwrap_or(MetricArg::Euclidean).into(),
                max_cost: args.max_cost.or(cfg.max_cost).unwrap_or(1.0),
            };
            let ell = require(ell, "ell")?;
            let inst = random_mts(&p, &mut rng)?;
            let traces = mixed_predictors(&inst, ell, &mut rng)?;
            let mut v = serde_json::to_value(p)?;
            v["ell"] = ell.into();
            (inst, traces, v, None)
        }
        GenKind::KserverLine => {
            let k = require(args.k.or(cfg.k), "k")?;
            if k == 0 {
                return Err(CliError::Config("k must be positive".into()));
            }
            let requests: Vec<usize> = (0..horizon).map(|_| rng.random_range(0..=k)).collect();
            let lb = gen_kserver_line_lb(k, &requests)?;
            let params = serde_json::json!({ "k": k, "T": horizon, "requests": requests });
            (lb.mts, lb.traces, params, None)
        }
        GenKind::KserverRandom => {
            let n = args.n.or(cfg.n).unwrap_or(6);
            let k = require(args.k.or(cfg.k), "k")?;
            let ell = require(ell, "ell")?;
            let (kinst, named) = random_lazy_line_kserver(n, k, horizon, ell, &mut rng)?;
            let (mts, traces) = kserver_config_mts(&kinst, &named)?;
            let params = serde_json::json!({ "n": n, "k": k, "T": horizon, "ell": ell, "kserver": kinst, "named": named });
            (mts, traces, params, None)
        }
    };
    save_instance(&output, &inst, &traces)?;
    let sidecar = Sidecar {
        generator: format!("{kind:?}").to_lowercase(),
        params,
        seed,
        sigma_seq: sigma,
    };
    fs::write(sidecar_path(&output), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(format!(
        "wrote {} ({} states, T = {}, {} predictors)\n",
        output.display(),
        inst.num_states(),
        inst.horizon(),
        traces.len()
    ))
}

fn run_spec(args: RunArgs) -> CliResult<(RunSpec, Option<PathBuf>)> {
    let cfg: RunConfig = read_config(args.config.as_deref())?;
    let instances = if args.instances.is_empty() { cfg.instances } else { args.instances };
    let spec = RunSpec {
        instances,
        algo: args.algo.or(cfg.algo).unwrap_or(Algo::Combine),
        subroutine: args.subroutine.or(cfg.subroutine).unwrap_or(Subroutine::OddExponent),
        epsilon: require(args.epsilon.or(cfg.epsilon), "epsilon")?,
        gamma: args.gamma.or(cfg.gamma),
        wiring: args.wiring.or(cfg.wiring),
        r: args.r.or(cfg.r),
        m: args.m.or(cfg.m),
        rho: args.rho.or(cfg.rho),
        trials: args.trials.or(cfg.trials).unwrap_or(1),
        seed: args.seed.or(cfg.seed).unwrap_or(0),
    };
    Ok((spec, args.output.or(cfg.output)))
}

/// Appends rows to `path`, writing the header first unless the file already
/// starts with it.
pub fn write_records(path: Option<&Path>, records: &[TrialRecord]) -> CliResult<String> {
    let header = csv_header();
    let body = csv_body(records);
    match path {
        None => Ok(header + &body),
        Some(p) => {
            let existing = fs::read_to_string(p).unwrap_or_default();
            let mut file = fs::OpenOptions::new().create(true).append(true).open(p)?;
            if existing.is_empty() {
                file.write_all(header.as_bytes())?;
            } else if !existing.starts_with(&header) {
                return Err(CliError::Config(format!(
                    "{} exists with a different header; refusing to append",
                    p.display()
                )));
            }
            file.write_all(body.as_bytes())?;
            Ok(format!("wrote {} rows to {}\n", records.len(), p.display()))
        }
    }
}

pub fn cmd_run(args: RunArgs) -> CliResult<String> {
    let (spec, output) = run_spec(args)?;
    let records = execute(&spec)?;
    write_records(output.as_deref(), &records)
}

pub fn cmd_sweep(args: SweepArgs) -> CliResult<String> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let spec: SweepSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let output = args.output.or_else(|| spec.output.clone());
    let records = execute_sweep(&spec)?;
    write_records(output.as_deref(), &records)
}

pub fn cmd_bench(args: BenchArgs) -> CliResult<String> {
    let (inst, traces) = load_instance(&args.instance)?;
    if traces.is_empty() {
        return Err(CliError::Config(format!("{} has no predictors", args.instance.display())));
    }
    let id = experiment::instance_ids(std::slice::from_ref(&args.instance))?.remove(0);
    let report = BenchmarkReport::compute(id, &inst, &traces, &args.m, &args.rho)?;
    let violations = report.ordering_violations();
    if !violations.is_empty() {
        return Err(CliError::Contract(violations.join("; ")));
    }
    let is_csv = args.output.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "csv"));
    let text = if is_csv {
        report.to_csv()
    } else {
        serde_json::to_string_pretty(&report)? + "\n"
    };
    match args.output {
        None => Ok(text),
        Some(p) => {
            fs::write(&p, text)?;
            Ok(format!("wrote {}\n", p.display()))
        }
    }
}

pub fn cmd_verify(args: VerifyArgs) -> CliResult<String> {
    let reports = run_suite(args.suite, args.seed);
    let mut out = String::new();
    for r in &reports {
        out.push_str(&r.line());
        out.push('\n');
        for f in r.failures.iter().take(10) {
            out.push_str(&format!("  {f}\n"));
        }
    }
    if reports.iter().all(|r| r.passed) {
        Ok(out)
    } else {
        Err(CliError::VerifyFailed(out))
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code; output goes to stdout and diagnostics to stderr.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(CliError::VerifyFailed(out)) => {
            print!("{out}");
            1
        }
        Err(e) => {
            eprintln!("mts: {e}");
            e.exit_code()
        }
    }
}
