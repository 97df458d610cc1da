//! Command-line front end for the privacy-constrained covariance design.
//!
//! Exit codes: 0 success, 2 usage error, 3 I/O error, 4 invalid configuration,
//! 5 solver failure, 6 proposed design did not converge (outputs are still
//! written).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use locpriv::beampattern::{beampattern, BeampatternRecord, GRID_POINTS};
use locpriv::pdd::{OuterRecord, PddConfig, PddError};
use locpriv::scenario::{Scenario, ScenarioError};
use locpriv::sweep::{Method, SweepError, SweepRecord, Sweeper};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

const EXIT_IO: u8 = 3;
const EXIT_CONFIG: u8 = 4;
const EXIT_SOLVER: u8 = 5;
const EXIT_NOT_CONVERGED: u8 = 6;

#[derive(Parser, Debug)]
#[command(name = "locpriv", version, about = "Location-privacy-aware transmit covariance design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the proposed design at one threshold.
    Solve(SolveArgs),
    /// Compare methods over a list of thresholds.
    Sweep(SweepArgs),
    /// Angular beampattern of one method's covariance.
    Beampattern(PatternArgs),
    /// Run both benchmarks at one threshold.
    Bench(SolveArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario TOML file; the built-in default scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario's phase seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; CSV goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stream outer iterations of the proposed design to stderr as CSV.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Privacy threshold √γ on Eve's position error (m).
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated √γ values (m).
    #[arg(long, value_delimiter = ',', default_value = "0,1,4,10")]
    gamma_list: Vec<f64>,
    /// Comma-separated methods: proposed, bench1, bench2.
    #[arg(long, value_delimiter = ',', default_value = "proposed,bench1,bench2")]
    methods: Vec<String>,
    /// Worker threads for independent sweep points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct PatternArgs {
    #[command(flatten)]
    common: Common,
    /// Privacy threshold √γ on Eve's position error (m).
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Method whose covariance is plotted.
    #[arg(long, default_value = "proposed")]
    method: String,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { path, source } => CliError::Io {
                context: format!("reading {}", path),
                source,
            },
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::UnknownMethod(_) | SweepError::Pdd(PddError::Config(_)) => {
                CliError::Config(e.to_string())
            }
            SweepError::Design(locpriv::design::DesignError::Invalid(_)) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn csv_err(context: &str) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        context: context.to_string(),
        source: io::Error::other(e),
    }
}

/// Sweep CSV row; wall times live in the manifest so the CSV is reproducible.
#[derive(Debug, Serialize)]
struct SweepRow {
    sqrt_gamma: f64,
    method: Method,
    bob_sqrt_crb: f64,
    eve_sqrt_crb: f64,
    power_dbm: f64,
    converged: bool,
    iterations: usize,
}

impl From<&SweepRecord> for SweepRow {
    fn from(r: &SweepRecord) -> Self {
        Self {
            sqrt_gamma: r.sqrt_gamma,
            method: r.method,
            bob_sqrt_crb: r.bob_sqrt_crb,
            eve_sqrt_crb: r.eve_sqrt_crb,
            power_dbm: r.power_dbm,
            converged: r.converged,
            iterations: r.iterations,
        }
    }
}

#[derive(Debug, Serialize)]
struct TimedRow {
    sqrt_gamma: f64,
    method: Method,
    wall_time_s: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: Option<String>,
    config_sha256: String,
    seed: u64,
    pdd: PddConfig,
    outputs: Vec<String>,
    timings: Vec<TimedRow>,
}

struct Loaded {
    scenario: Scenario,
    hash: String,
}

fn load(common: &Common) -> Result<Loaded, CliError> {
    let mut scenario = match &common.config {
        Some(path) => Scenario::load(path)?,
        None => Scenario::default(),
    };
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    let text = scenario.to_toml_string()?;
    let hash = Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(Loaded { scenario, hash })
}

fn check_sqrt_gamma(values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config("gamma list is empty".into()));
    }
    for &g in values {
        if !(g.is_finite() && g >= 0.0) {
            return Err(CliError::Config(format!(
                "gamma values must be finite and nonnegative, got {g}"
            )));
        }
    }
    Ok(())
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err("serializing CSV"))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Io {
            context: "serializing CSV".into(),
            source: io::Error::other(e.to_string()),
        })
}

/// Collects output files, then writes them with a manifest.
struct Outputs<'a> {
    dir: Option<&'a Path>,
    files: Vec<(String, Vec<u8>)>,
}

impl<'a> Outputs<'a> {
    fn new(dir: Option<&'a Path>) -> Self {
        Self {
            dir,
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    /// With an output directory everything lands there; otherwise the first
    /// file goes to stdout and the rest are dropped.
    fn finish(
        self,
        command: &str,
        common: &Common,
        loaded: &Loaded,
        pdd: PddConfig,
        timings: Vec<TimedRow>,
    ) -> Result<(), CliError> {
        let Some(dir) = self.dir else {
            if let Some((_, bytes)) = self.files.first() {
                io::stdout()
                    .write_all(bytes)
                    .map_err(io_err("writing stdout"))?;
            }
            return Ok(());
        };
        fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
        let mut names = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io_err(format!("writing {}", path.display())))?;
            names.push(name.clone());
        }
        let manifest = Manifest {
            tool: "locpriv",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: common.config.as_ref().map(|p| p.display().to_string()),
            config_sha256: loaded.hash.clone(),
            seed: loaded.scenario.seed,
            pdd,
            outputs: names,
            timings,
        };
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io {
            context: "serializing manifest".into(),
            source: io::Error::other(e),
        })?;
        fs::write(&path, text + "\n").map_err(io_err(format!("writing {}", path.display())))
    }
}

#[derive(Debug, Serialize)]
struct TraceRow {
    k: usize,
    objective: f64,
    h: f64,
    rho: f64,
    bob_crb: f64,
    eve_crb: f64,
    dual_step: bool,
    inner_iterations: usize,
}

impl From<&OuterRecord> for TraceRow {
    fn from(r: &OuterRecord) -> Self {
        Self {
            k: r.k,
            objective: r.objective,
            h: r.h,
            rho: r.rho,
            bob_crb: r.bob_crb,
            eve_crb: r.eve_crb,
            dual_step: r.dual_step,
            inner_iterations: r.inner_iterations,
        }
    }
}

fn verbose_observer(enabled: bool) -> impl FnMut(&OuterRecord) {
    let mut header = true;
    move |r: &OuterRecord| {
        if !enabled {
            return;
        }
        if header {
            eprintln!("k,objective,h,rho,bob_crb,eve_crb,dual_step,inner_iterations");
            header = false;
        }
        eprintln!(
            "{},{},{},{},{},{},{},{}",
            r.k, r.objective, r.h, r.rho, r.bob_crb, r.eve_crb, r.dual_step, r.inner_iterations
        );
    }
}

fn not_converged(records: &[SweepRecord]) -> bool {
    records.iter().any(|r| !r.converged)
}

fn timings(records: &[SweepRecord]) -> Vec<TimedRow> {
    records
        .iter()
        .map(|r| TimedRow {
            sqrt_gamma: r.sqrt_gamma,
            method: r.method,
            wall_time_s: r.wall_time_s,
        })
        .collect()
}

fn cmd_solve(args: &SolveArgs) -> Result<bool, CliError> {
    check_sqrt_gamma(&[args.gamma])?;
    let loaded = load(&args.common)?;
    let pdd = PddConfig::default();
    let sweeper = Sweeper::new(&loaded.scenario, pdd)?;
    let solved = sweeper.solve_observed(
        Method::Proposed,
        args.gamma,
        verbose_observer(args.common.verbose),
    )?;
    let records = [solved.record.clone()];
    let rows: Vec<SweepRow> = records.iter().map(SweepRow::from).collect();
    let trace: Vec<TraceRow> = solved
        .lifted
        .as_ref()
        .map(|l| l.trace.iter().map(TraceRow::from).collect())
        .unwrap_or_default();
    let mut out = Outputs::new(args.common.out.as_deref());
    out.add("solution.csv", csv_bytes(&rows)?);
    out.add("trace.csv", csv_bytes(&trace)?);
    out.finish("solve", &args.common, &loaded, pdd, timings(&records))?;
    Ok(not_converged(&records))
}

fn cmd_bench(args: &SolveArgs) -> Result<bool, CliError> {
    check_sqrt_gamma(&[args.gamma])?;
    let loaded = load(&args.common)?;
    let pdd = PddConfig::default();
    let sweeper = Sweeper::new(&loaded.scenario, pdd)?;
    let records = [Method::Bench1, Method::Bench2]
        .into_iter()
        .map(|m| sweeper.solve(m, args.gamma).map(|s| s.record))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<SweepRow> = records.iter().map(SweepRow::from).collect();
    let mut out = Outputs::new(args.common.out.as_deref());
    out.add("bench.csv", csv_bytes(&rows)?);
    out.finish("bench", &args.common, &loaded, pdd, timings(&records))?;
    Ok(false)
}

fn cmd_sweep(args: &SweepArgs) -> Result<bool, CliError> {
    check_sqrt_gamma(&args.gamma_list)?;
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    if methods.is_empty() {
        return Err(CliError::Config("method list is empty".into()));
    }
    if args.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let loaded = load(&args.common)?;
    let pdd = PddConfig::default();
    let sweeper = Sweeper::new(&loaded.scenario, pdd)?;
    let points: Vec<(f64, Method)> = args
        .gamma_list
        .iter()
        .flat_map(|&g| methods.iter().map(move |&m| (g, m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let verbose = args.common.verbose;
    let started = Instant::now();
    let records = pool.install(|| {
        points
            .par_iter()
            .map(|&(g, m)| {
                let solved = sweeper.solve(m, g)?;
                if verbose {
                    eprintln!(
                        "{m} sqrt_gamma={g}: done in {:.1}s (elapsed {:.1}s)",
                        solved.record.wall_time_s,
                        started.elapsed().as_secs_f64()
                    );
                }
                Ok(solved.record)
            })
            .collect::<Result<Vec<_>, SweepError>>()
    })?;
    let rows: Vec<SweepRow> = records.iter().map(SweepRow::from).collect();
    let mut out = Outputs::new(args.common.out.as_deref());
    out.add("sweep.csv", csv_bytes(&rows)?);
    out.finish("sweep", &args.common, &loaded, pdd, timings(&records))?;
    Ok(not_converged(&records))
}

fn cmd_beampattern(args: &PatternArgs) -> Result<bool, CliError> {
    check_sqrt_gamma(&[args.gamma])?;
    let method: Method = args.method.parse()?;
    let loaded = load(&args.common)?;
    let pdd = PddConfig::default();
    let sweeper = Sweeper::new(&loaded.scenario, pdd)?;
    let solved =
        sweeper.solve_observed(method, args.gamma, verbose_observer(args.common.verbose))?;
    let pattern: Vec<BeampatternRecord> = beampattern(&solved.v, GRID_POINTS);
    let records = [solved.record];
    let mut out = Outputs::new(args.common.out.as_deref());
    out.add("beampattern.csv", csv_bytes(&pattern)?);
    out.finish("beampattern", &args.common, &loaded, pdd, timings(&records))?;
    Ok(not_converged(&records))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Beampattern(a) => cmd_beampattern(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("warning: the proposed design did not converge; best iterate written");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
