//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use e2boost_core::baselines::PolicySpec;
use e2boost_core::netmodel::PhaseShiftMode;

use crate::error::AppError;
use crate::harness::{run_monte_carlo, ExperimentSpec, WorldSource};
use crate::oracle::{self, OracleCache};
use crate::output;
use crate::scenario::parse_phase_mode;

/// Default output directory when neither `--out` nor the environment sets one.
pub const DEFAULT_OUT: &str = "e2boost-out";
pub const OUT_ENV: &str = "E2BOOST_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "e2boost",
    version,
    about = "Distributed RIS and spreading-factor selection simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the success-probability table of a scenario and cache it.
    Oracle(OracleArgs),
    /// Run Monte Carlo trials for one or more policies.
    Run(Box<RunArgs>),
    /// Merge aggregate CSVs from several runs into one long table.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the cache file.
    #[arg(long, env = OUT_ENV, default_value = DEFAULT_OUT)]
    pub out: PathBuf,
    /// `optimal` or `constant:<index>`.
    #[arg(long, value_parser = phase_arg)]
    pub phase_mode: Option<PhaseShiftMode>,
    #[arg(long)]
    pub rician: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON experiment spec, such as the `config` object of a previous
    /// `summary.json`. Flags given on the command line override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Policy name; repeat for several policies.
    #[arg(long = "policy")]
    pub policies: Vec<PolicySpec>,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub nu1: Option<f64>,
    #[arg(long)]
    pub nu2: Option<f64>,
    #[arg(long)]
    pub nu3: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub oracle_trials: Option<u64>,
    /// `optimal` or `constant:<index>`.
    #[arg(long, value_parser = phase_arg)]
    pub phase_mode: Option<PhaseShiftMode>,
    #[arg(long)]
    pub rician: Option<f64>,
    /// Sample the full channel every slot instead of using the oracle table.
    #[arg(long)]
    pub full_channel: bool,
    /// Write a per-slot trace of trial 0 for every policy.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub points: Option<u64>,
    #[arg(long)]
    pub eps_game: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Directory holding oracle cache files; defaults to the output directory.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Aggregate CSV files; each is labelled by its file stem.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn phase_arg(text: &str) -> Result<PhaseShiftMode, String> {
    parse_phase_mode(text).map_err(|e| e.to_string())
}

impl RunArgs {
    /// Builds the experiment spec from the optional config file and flags.
    pub fn to_spec(&self) -> Result<ExperimentSpec, AppError> {
        let mut spec = match &self.config {
            Some(path) => load_spec(path)?,
            None => {
                let scenario = self
                    .scenario
                    .clone()
                    .ok_or_else(|| AppError::config("scenario: --scenario or --config is required"))?;
                ExperimentSpec::new(scenario, Vec::new(), PathBuf::from(DEFAULT_OUT))
            }
        };
        if let Some(s) = &self.scenario {
            spec.scenario = s.clone();
        }
        if !self.policies.is_empty() {
            spec.policies = self.policies.clone();
        }
        macro_rules! set {
            ($($field:ident).+ <- $value:expr) => {
                if let Some(v) = $value {
                    spec.$($field).+ = v;
                }
            };
        }
        set!(epochs <- self.epochs);
        set!(schedule.nu1 <- self.nu1);
        set!(schedule.nu2 <- self.nu2);
        set!(schedule.nu3 <- self.nu3);
        set!(schedule.delta <- self.delta);
        set!(reps <- self.reps);
        set!(seed <- self.seed);
        set!(out <- self.out.clone());
        set!(oracle_trials <- self.oracle_trials);
        set!(points <- self.points);
        set!(eps_game <- self.eps_game);
        set!(nu <- self.nu);
        if self.phase_mode.is_some() {
            spec.phase_mode = self.phase_mode;
        }
        if self.rician.is_some() {
            spec.rician_factor = self.rician;
        }
        spec.full_channel |= self.full_channel;
        spec.trace |= self.trace;
        spec.validate()?;
        Ok(spec)
    }
}

/// Reads an experiment spec from JSON. A full `summary.json` is accepted too.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::config(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| AppError::config(format!("{}: {e}", path.display())))?;
    let value = match value.get("config") {
        Some(inner) if value.get("schema_version").is_some() => inner.clone(),
        _ => value,
    };
    serde_json::from_value(value).map_err(|e| AppError::config(format!("{}: {e}", path.display())))
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<PathBuf, AppError> {
    if args.trials == 0 {
        return Err(AppError::config("trials: must be at least 1"));
    }
    let mut spec = ExperimentSpec::new(args.scenario.clone(), vec![PolicySpec::Optimal], args.out.clone());
    spec.phase_mode = args.phase_mode;
    spec.rician_factor = args.rician;
    let file = spec.load_scenario_file()?;
    if file.is_random() {
        return Err(AppError::config(
            "devices.random: oracle caching needs fixed device positions",
        ));
    }
    let scenario = file.build()?;
    let cache = OracleCache::build(&scenario, args.trials, args.seed)?;
    let path = args
        .out
        .join(oracle::cache_file_name(&cache.scenario_hash, args.trials, args.seed));
    cache.write(&path)?;
    Ok(path)
}

pub fn cmd_run(args: &RunArgs) -> Result<Vec<PathBuf>, AppError> {
    let spec = args.to_spec()?;
    let cache_dir = args.cache_dir.clone().unwrap_or_else(|| spec.out.clone());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| AppError::runtime(format!("cannot start workers: {e}")))?;
    pool.install(|| run_spec(&spec, Some(&cache_dir)))
}

/// Runs every policy of `spec` and writes the result files.
pub fn run_spec(spec: &ExperimentSpec, cache_dir: Option<&Path>) -> Result<Vec<PathBuf>, AppError> {
    spec.validate()?;
    let source = WorldSource::prepare(spec, cache_dir)?;
    let hash = match &source {
        WorldSource::Fixed(w) => Some(oracle::scenario_hash(&w.scenario)),
        WorldSource::Random { .. } => None,
    };
    let runs = spec
        .policies
        .iter()
        .map(|&p| run_monte_carlo(spec, &source, p))
        .collect::<Result<Vec<_>, _>>()?;
    output::write_run(&spec.out, spec, hash, &runs)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<PathBuf, AppError> {
    let rows = output::compare(&args.inputs)?;
    output::write_compare_csv(&args.out, &rows)?;
    Ok(args.out.clone())
}

/// Parses arguments and runs the selected command.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, AppError> {
    match &cli.command {
        Command::Oracle(a) => cmd_oracle(a).map(|p| vec![p]),
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a).map(|p| vec![p]),
    }
}
