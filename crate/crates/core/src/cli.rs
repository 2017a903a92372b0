//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bench::{persist, run_repetitions, Format};
use crate::error::Error;
use crate::ice::{run, Method, RunConfig};
use crate::oracle::mc_estimate;
use crate::problems::{catalog, registry, Problem};

pub const THREADS_ENV: &str = "SAFE_ICE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "safe-ice", version, about = "Rare-event failure probability estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one ICE or Safe-ICE estimation and print its result record.
    Estimate(Flags),
    /// Run repeated seeded estimations and persist per-run and summary records.
    Bench(Flags),
    /// Crude Monte Carlo reference estimate.
    Oracle(Flags),
    /// Print the available benchmark problems.
    ListProblems,
}

#[derive(Debug, Clone, Default, Args)]
struct Flags {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    z: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    /// ice or safe-ice.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    n_per_iter: Option<usize>,
    #[arg(long)]
    k_init: Option<usize>,
    #[arg(long)]
    delta_star: Option<f64>,
    #[arg(long)]
    delta_target: Option<f64>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_em: Option<usize>,
    #[arg(long)]
    em_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of repetitions (bench).
    #[arg(long)]
    reps: Option<usize>,
    /// Reference probability (bench); defaults to the closed form or a Monte Carlo oracle.
    #[arg(long)]
    p_ref: Option<f64>,
    /// Output file (bench).
    #[arg(long)]
    out: Option<PathBuf>,
    /// jsonl or csv (bench); inferred from the output extension when omitted.
    #[arg(long)]
    format: Option<String>,
    /// Monte Carlo sample budget (oracle, and bench without p_ref).
    #[arg(long)]
    n_total: Option<u64>,
    #[arg(long)]
    batch_size: Option<u64>,
    /// Worker threads; falls back to SAFE_ICE_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

/// Config file schema; every field optional, unknown fields rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<String>,
    problem: Option<String>,
    z: Option<f64>,
    d: Option<usize>,
    method: Option<String>,
    n_per_iter: Option<usize>,
    k_init: Option<usize>,
    delta_star: Option<f64>,
    delta_target: Option<f64>,
    sigma0: Option<f64>,
    max_outer: Option<usize>,
    max_em: Option<usize>,
    em_tol: Option<f64>,
    seed: Option<u64>,
    reps: Option<usize>,
    p_ref: Option<f64>,
    out: Option<PathBuf>,
    format: Option<String>,
    n_total: Option<u64>,
    batch_size: Option<u64>,
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Estimate,
    Bench,
    Oracle,
    ListProblems,
}

/// Fully resolved and validated command configuration.
#[derive(Debug, Clone, Serialize)]
pub struct CliConfig {
    pub command: CommandKind,
    pub problem: String,
    pub z: f64,
    pub d: usize,
    pub run: RunConfig,
    pub reps: usize,
    pub p_ref: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub n_total: u64,
    pub batch_size: u64,
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    /// Exit 0 after printing help or version.
    Info(String),
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Runtime(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn default_dim(problem: &str) -> usize {
    if problem == "oscillator" {
        10
    } else {
        2
    }
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

fn merge(kind: CommandKind, flags: Flags, env_threads: Option<String>) -> Result<CliConfig, CliError> {
    let file = match &flags.config {
        Some(p) => read_file_config(p)?,
        None => FileConfig::default(),
    };
    if let Some(c) = &file.command {
        let expected = serde_json::to_value(kind).map_err(runtime)?;
        if expected.as_str() != Some(c.as_str()) {
            return Err(usage(format!("config file is for command '{c}'")));
        }
    }
    macro_rules! pick {
        ($f:ident) => {
            flags.$f.clone().or(file.$f.clone())
        };
    }
    let problem = pick!(problem).ok_or_else(|| usage("missing --problem"))?;
    let z = pick!(z).ok_or_else(|| usage("missing --z"))?;
    let d = pick!(d).unwrap_or_else(|| default_dim(&problem));
    let defaults = RunConfig::default();
    let method = match pick!(method) {
        Some(m) => m.parse::<Method>().map_err(usage)?,
        None => defaults.method,
    };
    let run = RunConfig {
        n_per_iter: pick!(n_per_iter).unwrap_or(defaults.n_per_iter),
        k_init: pick!(k_init).unwrap_or(defaults.k_init),
        delta_star: pick!(delta_star).unwrap_or(defaults.delta_star),
        delta_target: pick!(delta_target).unwrap_or(defaults.delta_target),
        sigma0: pick!(sigma0).unwrap_or(defaults.sigma0),
        anneal_horizon: None,
        max_outer: pick!(max_outer).unwrap_or(defaults.max_outer),
        em_tol: pick!(em_tol).unwrap_or(defaults.em_tol),
        max_em: pick!(max_em).unwrap_or(defaults.max_em),
        seed: pick!(seed).unwrap_or(defaults.seed),
        method,
    };
    let out = pick!(out);
    let format = match pick!(format) {
        Some(f) => f.parse::<Format>().map_err(usage)?,
        None => match out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            _ => Format::Jsonl,
        },
    };
    let threads = match pick!(threads) {
        Some(t) => Some(t),
        None => match env_threads {
            Some(s) if !s.trim().is_empty() => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| usage(format!("{THREADS_ENV} must be a positive integer, got '{s}'")))?,
            ),
            _ => None,
        },
    };
    let cfg = CliConfig {
        command: kind,
        problem,
        z,
        d,
        run,
        reps: pick!(reps).unwrap_or(50),
        p_ref: pick!(p_ref),
        out,
        format,
        n_total: pick!(n_total).unwrap_or(1_000_000),
        batch_size: pick!(batch_size).unwrap_or(100_000),
        threads,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &CliConfig) -> Result<(), CliError> {
    registry(&cfg.problem, cfg.z, cfg.d).map_err(usage)?;
    cfg.run.validate().map_err(usage)?;
    if cfg.threads == Some(0) {
        return Err(usage("threads must be >= 1"));
    }
    match cfg.command {
        CommandKind::Bench => {
            if cfg.reps < 2 {
                return Err(usage(format!("reps must be >= 2, got {}", cfg.reps)));
            }
            if let Some(p) = cfg.p_ref {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(usage(format!("p_ref must lie in (0, 1], got {p}")));
                }
            }
            if cfg.out.is_none() {
                return Err(usage("bench needs --out"));
            }
        }
        CommandKind::Oracle => {
            if cfg.n_total < crate::oracle::MIN_SAMPLES {
                return Err(usage(format!("n_total must be >= {}, got {}", crate::oracle::MIN_SAMPLES, cfg.n_total)));
            }
            if cfg.batch_size == 0 || cfg.batch_size > cfg.n_total {
                return Err(usage(format!("batch_size must lie in [1, n_total], got {}", cfg.batch_size)));
            }
        }
        _ => {}
    }
    Ok(())
}

/// Parses argv (including the program name) into a command configuration.
/// `None` means `list-problems`.
pub fn parse_args<I, T>(argv: I, env_threads: Option<String>) -> Result<Option<CliConfig>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        let text = e.render().to_string();
        match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Info(text),
            _ => CliError::Usage(text),
        }
    })?;
    let (kind, flags) = match cli.command {
        Command::Estimate(f) => (CommandKind::Estimate, f),
        Command::Bench(f) => (CommandKind::Bench, f),
        Command::Oracle(f) => (CommandKind::Oracle, f),
        Command::ListProblems => return Ok(None),
    };
    merge(kind, flags, env_threads).map(Some)
}

#[derive(Debug, Serialize)]
struct EstimateRecord<'a> {
    problem: &'a str,
    z: f64,
    d: usize,
    method: Method,
    seed: u64,
    pf: f64,
    iterations: usize,
    final_k: usize,
    lsf_evals: usize,
    converged: bool,
    stagnated: bool,
    sigma_trace: &'a [f64],
    lambda_trace: &'a [f64],
    k_trace: &'a [usize],
}

#[derive(Debug, Serialize)]
struct OracleRecord<'a> {
    problem: &'a str,
    z: f64,
    d: usize,
    seed: u64,
    pf: f64,
    n_total: u64,
    n_fail: u64,
    cv: f64,
}

fn record(value: &impl Serialize) -> Result<String, CliError> {
    serde_json::to_string(value).map_err(runtime)
}

/// JSON records for stdout and diagnostics for stderr.
#[derive(Debug, Default)]
struct Output {
    records: Vec<String>,
    notes: Vec<String>,
}

fn reference_probability(cfg: &CliConfig, problem: &Problem, notes: &mut Vec<String>) -> Result<f64, CliError> {
    if let Some(p) = cfg.p_ref {
        return Ok(p);
    }
    if let Some(p) = problem.analytic_pf() {
        return Ok(p);
    }
    notes.push(format!("no p_ref given; running a Monte Carlo oracle with {} samples", cfg.n_total));
    let est = mc_estimate(problem, cfg.n_total, cfg.batch_size.min(cfg.n_total), cfg.run.seed).map_err(runtime)?;
    if est.n_fail == 0 {
        return Err(runtime("the Monte Carlo oracle saw no failures; pass --p-ref"));
    }
    Ok(est.pf)
}

/// Executes a resolved configuration.
pub fn execute(cfg: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let problem = registry(&cfg.problem, cfg.z, cfg.d).map_err(usage)?;
    let body = || -> Result<Output, CliError> {
        let mut o = Output::default();
        match cfg.command {
            CommandKind::Estimate => {
                let r = run(&problem, &cfg.run).map_err(runtime)?;
                if r.stagnated {
                    o.notes.push("warning: sigma stagnated at the top of its search range".into());
                }
                o.records.push(record(&EstimateRecord {
                        problem: &cfg.problem,
                        z: cfg.z,
                        d: cfg.d,
                        method: r.method,
                        seed: r.seed,
                        pf: r.pf_estimate,
                        iterations: r.iterations,
                        final_k: r.final_k,
                        lsf_evals: r.lsf_evals,
                        converged: r.converged,
                        stagnated: r.stagnated,
                        sigma_trace: &r.sigma_trace,
                        lambda_trace: &r.lambda_trace,
                    k_trace: &r.k_trace,
                })?);
            }
            CommandKind::Bench => {
                let p_ref = reference_probability(cfg, &problem, &mut o.notes)?;
                let stats = run_repetitions(&problem, &cfg.run, cfg.reps, p_ref).map_err(runtime)?;
                let path = cfg.out.as_ref().ok_or_else(|| usage("bench needs --out"))?;
                persist(&stats, path, cfg.format).map_err(runtime)?;
                o.records.push(record(&stats.summary())?);
            }
            CommandKind::Oracle => {
                let est = mc_estimate(&problem, cfg.n_total, cfg.batch_size, cfg.run.seed).map_err(runtime)?;
                o.records.push(record(&OracleRecord {
                        problem: &cfg.problem,
                        z: cfg.z,
                        d: cfg.d,
                        seed: cfg.run.seed,
                        pf: est.pf,
                        n_total: est.n_total,
                        n_fail: est.n_fail,
                    cv: est.cv,
                })?);
            }
            CommandKind::ListProblems => o.records = problem_records()?,
        }
        Ok(o)
    };
    let result = match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(runtime)?;
            pool.install(body)
        }
        None => body(),
    };
    let o = result?;
    for note in &o.notes {
        let _ = writeln!(err, "{note}");
    }
    write_records(out, &o.records)
}

fn write_records(out: &mut dyn Write, records: &[String]) -> Result<(), CliError> {
    for line in records {
        writeln!(out, "{line}").map_err(runtime)?;
    }
    out.flush().map_err(runtime)
}

fn problem_records() -> Result<Vec<String>, CliError> {
    catalog().iter().map(record).collect()
}

/// Full entry point; returns the process exit code.
pub fn main_with<I, T>(argv: I, env_threads: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_args(argv, env_threads).and_then(|cfg| match cfg {
        Some(cfg) => execute(&cfg, out, err),
        None => problem_records().and_then(|r| write_records(out, &r)),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            match e {
                CliError::Info(text) => {
                    let _ = write!(out, "{text}");
                }
                CliError::Usage(msg) => {
                    let _ = writeln!(err, "error: {}", msg.trim_end());
                }
                CliError::Runtime(msg) => {
                    let _ = writeln!(err, "error: {msg}");
                }
            }
            code
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        runtime(e)
    }
}
