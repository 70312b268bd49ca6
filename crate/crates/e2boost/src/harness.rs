//! Monte Carlo experiment driver.

use std::path::PathBuf;

use e2boost_core::bandit::{Action, EpochSchedule, LearnerConfig};
use e2boost_core::baselines::{OptimalProfile, PolicySpec, QLearningConfig};
use e2boost_core::channel::{ChannelModel, SuccessProbTable};
use e2boost_core::netmodel::{sample_device_positions, PhaseShiftMode, Scenario};
use e2boost_core::sim::{mean_stderr, run_trial, trial_rng, Checkpoint, Environment, TraceRow, TrialConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::AppError;
use crate::oracle;
use crate::scenario::ScenarioFile;

/// Stream used to place devices in random-layout trials.
pub const LAYOUT_STREAM: u64 = 0xFF_FF01;
/// Stream used to estimate a per-trial oracle in random-layout trials.
pub const TRIAL_ORACLE_STREAM: u64 = 0xFF_FF02;

/// Everything needed to reproduce a batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: PathBuf,
    pub policies: Vec<PolicySpec>,
    pub epochs: u32,
    pub schedule: EpochSchedule,
    pub reps: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub oracle_trials: u64,
    /// Overrides the scenario file's phase configuration.
    pub phase_mode: Option<PhaseShiftMode>,
    /// Overrides the scenario file's Rician factor.
    pub rician_factor: Option<f64>,
    pub full_channel: bool,
    pub eps_game: f64,
    pub nu: f64,
    pub qlearning: QLearningConfig,
    /// Number of evenly spaced time points in aggregate outputs.
    pub points: u64,
    pub trace: bool,
}

impl ExperimentSpec {
    pub fn new(scenario: PathBuf, policies: Vec<PolicySpec>, out: PathBuf) -> Self {
        Self {
            scenario,
            policies,
            epochs: 10,
            schedule: EpochSchedule::default(),
            reps: 100,
            seed: 0,
            out,
            oracle_trials: 100_000,
            phase_mode: None,
            rician_factor: None,
            full_channel: false,
            eps_game: LearnerConfig::DEFAULT_EPS_GAME,
            nu: LearnerConfig::DEFAULT_NU,
            qlearning: QLearningConfig::default(),
            points: 500,
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if self.policies.is_empty() {
            return Err(AppError::config("policies: at least one policy is required"));
        }
        if self.reps == 0 {
            return Err(AppError::config("reps: must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(AppError::config("epochs: must be at least 1"));
        }
        if !self.schedule.is_valid() {
            return Err(AppError::config(
                "schedule: nu values must be positive and delta non-negative",
            ));
        }
        if self.oracle_trials == 0 {
            return Err(AppError::config("oracle_trials: must be at least 1"));
        }
        if self.points == 0 {
            return Err(AppError::config("points: must be at least 1"));
        }
        if !self.scenario.is_file() {
            return Err(AppError::config(format!(
                "scenario: file {} does not exist",
                self.scenario.display()
            )));
        }
        Ok(())
    }

    pub fn horizon(&self) -> u64 {
        self.schedule.total_slots(self.epochs)
    }

    /// Elapsed-slot counts reported in aggregate outputs: an even grid plus
    /// every epoch boundary.
    pub fn time_points(&self) -> Vec<u64> {
        let horizon = self.horizon();
        let mut points: Vec<u64> = (1..=self.points).map(|i| (i * horizon).div_ceil(self.points)).collect();
        points.extend(self.schedule.epoch_ends(self.epochs));
        points.sort_unstable();
        points.dedup();
        points.retain(|&p| p >= 1 && p <= horizon);
        points
    }

    /// Slot index at which the final epoch starts.
    pub fn final_epoch_start(&self) -> u64 {
        self.schedule.total_slots(self.epochs - 1)
    }

    fn apply_overrides(&self, file: &mut ScenarioFile) {
        if let Some(z) = self.rician_factor {
            file.radio.rician_factor = z;
        }
        match self.phase_mode {
            Some(PhaseShiftMode::OptimalForUes) => {
                file.phase_shift.mode = "optimal".into();
            }
            Some(PhaseShiftMode::Constant { rho }) => {
                file.phase_shift.mode = "constant".into();
                file.phase_shift.rho = Some(rho);
            }
            None => {}
        }
    }

    /// Loads the scenario file with command-line overrides applied.
    pub fn load_scenario_file(&self) -> Result<ScenarioFile, AppError> {
        let mut file = ScenarioFile::load(&self.scenario)?;
        self.apply_overrides(&mut file);
        Ok(file)
    }

    fn trial_config(&self, policy: PolicySpec, trial: u64) -> TrialConfig {
        TrialConfig {
            horizon: None,
            trial,
            eps_game: self.eps_game,
            nu: self.nu,
            qlearning: self.qlearning,
            clustering: true,
            record_trace: self.trace && trial == 0,
            checkpoints: self.time_points(),
            histogram_from: self.final_epoch_start(),
            ..TrialConfig::new(policy, self.schedule, self.epochs, self.seed)
        }
    }
}

/// A trial-ready world: the scenario, its oracle and the optimal benchmark.
#[derive(Debug, Clone)]
pub struct World {
    pub scenario: Scenario,
    pub env: Environment,
    pub profile: OptimalProfile,
    pub optimal_rate: f64,
}

impl World {
    pub fn new(scenario: Scenario, table: SuccessProbTable, full_channel: bool) -> Result<Self, AppError> {
        let rates = scenario.sf_table.rates.clone();
        let profile = OptimalProfile::from_oracle(&table, &rates)?;
        let optimal_rate = profile.expected_sum_rate(&scenario.ris_active_prob);
        let mut env = Environment::new(table, rates, scenario.ris_active_prob.clone())?;
        if full_channel {
            env = env.with_channel(ChannelModel::build(&scenario)?);
        }
        Ok(Self {
            scenario,
            env,
            profile,
            optimal_rate,
        })
    }
}

/// Where the worlds of a batch come from.
#[derive(Debug, Clone)]
pub enum WorldSource {
    /// One world shared by every trial.
    Fixed(Box<World>),
    /// A new random device layout and oracle per trial.
    Random {
        file: Box<ScenarioFile>,
        oracle_trials: u64,
        full_channel: bool,
    },
}

impl WorldSource {
    /// Prepares the batch world. Fixed layouts use the oracle cache in
    /// `cache_dir` when given.
    pub fn prepare(spec: &ExperimentSpec, cache_dir: Option<&std::path::Path>) -> Result<Self, AppError> {
        let file = spec.load_scenario_file()?;
        if file.is_random() {
            return Ok(WorldSource::Random {
                file: Box::new(file),
                oracle_trials: spec.oracle_trials,
                full_channel: spec.full_channel,
            });
        }
        let scenario = file.build()?;
        let table = oracle::load_or_build(&scenario, spec.oracle_trials, spec.seed, cache_dir)?;
        Ok(WorldSource::Fixed(Box::new(World::new(
            scenario,
            table,
            spec.full_channel,
        )?)))
    }

    fn world_for(&self, seed: u64, trial: u64) -> Result<std::borrow::Cow<'_, World>, AppError> {
        match self {
            WorldSource::Fixed(w) => Ok(std::borrow::Cow::Borrowed(w)),
            WorldSource::Random {
                file,
                oracle_trials,
                full_channel,
            } => {
                let placement = file.devices.random.as_ref().expect("random source has a placement");
                let mut rng = trial_rng(seed, trial, LAYOUT_STREAM);
                let devices = sample_device_positions(
                    &placement.disc(),
                    placement.count,
                    placement.height,
                    file.devices.min_distance,
                    &mut rng,
                )?;
                let scenario = file.build_with_devices(devices)?;
                let mut rng = trial_rng(seed, trial, TRIAL_ORACLE_STREAM);
                let table = e2boost_core::channel::estimate_success_probs(&scenario, *oracle_trials, &mut rng)?;
                Ok(std::borrow::Cow::Owned(World::new(scenario, table, *full_channel)?))
            }
        }
    }
}

/// Per-trial results kept after the trial's ledger is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub mean_sum_throughput: f64,
    pub pseudo_regret: f64,
    pub regret: f64,
    pub optimal_rate: f64,
    /// Each device's most selected action during the final epoch.
    pub final_epoch_modes: Vec<Action>,
    /// Mean selections per device and choice arm over the whole trial.
    pub selections: Vec<Vec<u64>>,
    pub collisions: u64,
    pub rotation_faults: u64,
    pub clusters: Option<Vec<usize>>,
}

impl TrialSummary {
    /// All devices settled on distinct RISs with the fastest SF.
    pub fn converged_to_distinct_fastest(&self) -> bool {
        let mut seen = Vec::new();
        for a in &self.final_epoch_modes {
            match *a {
                Action::Ris { ris, sf: 0 } if !seen.contains(&ris) => seen.push(ris),
                _ => return false,
            }
        }
        true
    }
}

/// Aggregated statistics at one time point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub time: u64,
    pub mean_throughput: f64,
    pub stderr: f64,
    pub pseudo_regret: f64,
    pub pseudo_regret_stderr: f64,
    pub realized_throughput: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRun {
    pub policy: PolicySpec,
    pub trials: Vec<TrialSummary>,
    pub aggregate: Vec<AggregatePoint>,
    pub trace: Vec<TraceRow>,
}

impl PolicyRun {
    pub fn final_point(&self) -> Option<&AggregatePoint> {
        self.aggregate.last()
    }

    pub fn mean_optimal_rate(&self) -> f64 {
        mean_stderr(&self.trials.iter().map(|t| t.optimal_rate).collect::<Vec<_>>()).0
    }

    pub fn converged_fraction(&self) -> f64 {
        let hits = self.trials.iter().filter(|t| t.converged_to_distinct_fastest()).count();
        hits as f64 / self.trials.len().max(1) as f64
    }
}

fn run_one(
    spec: &ExperimentSpec,
    source: &WorldSource,
    policy: PolicySpec,
    trial: u64,
) -> Result<(TrialSummary, Vec<TraceRow>), AppError> {
    let world = source.world_for(spec.seed, trial)?;
    let cfg = spec.trial_config(policy, trial);
    let out = run_trial(&cfg, &world.env, &world.profile, &world.scenario.devices)?;
    let ledger = &out.ledger;
    let summary = TrialSummary {
        trial,
        checkpoints: ledger.checkpoints.clone(),
        mean_sum_throughput: ledger.mean_sum_throughput(),
        pseudo_regret: ledger.pseudo_regret,
        regret: ledger.regret,
        optimal_rate: world.optimal_rate,
        final_epoch_modes: (0..ledger.n_players).map(|n| ledger.window_mode(n)).collect(),
        selections: (0..ledger.n_players)
            .map(|n| ledger.selection_row(n).to_vec())
            .collect(),
        collisions: ledger.collisions.iter().sum(),
        rotation_faults: out.rotation_faults,
        clusters: out.clusters.map(|c| c.assignment),
    };
    Ok((summary, out.trace))
}

/// Aggregates checkpoint series across trials.
pub fn aggregate(trials: &[TrialSummary]) -> Vec<AggregatePoint> {
    let len = trials.iter().map(|t| t.checkpoints.len()).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let column =
                |f: fn(&Checkpoint) -> f64| -> Vec<f64> { trials.iter().map(|t| f(&t.checkpoints[i])).collect() };
            let (mean_throughput, stderr) = mean_stderr(&column(|c| c.throughput));
            let (pseudo_regret, pseudo_regret_stderr) = mean_stderr(&column(|c| c.pseudo_regret));
            let (realized_throughput, _) = mean_stderr(&column(|c| c.realized_throughput));
            AggregatePoint {
                time: trials[0].checkpoints[i].slot,
                mean_throughput,
                stderr,
                pseudo_regret,
                pseudo_regret_stderr,
                realized_throughput,
            }
        })
        .collect()
}

/// Runs `spec.reps` trials of `policy`. Trials execute in parallel on the
/// current rayon pool; results are ordered by trial index.
pub fn run_monte_carlo(spec: &ExperimentSpec, source: &WorldSource, policy: PolicySpec) -> Result<PolicyRun, AppError> {
    let results: Vec<(TrialSummary, Vec<TraceRow>)> = (0..spec.reps)
        .into_par_iter()
        .map(|t| run_one(spec, source, policy, t))
        .collect::<Result<_, _>>()?;
    let mut trace = Vec::new();
    let mut trials = Vec::with_capacity(results.len());
    for (summary, rows) in results {
        if summary.trial == 0 {
            trace = rows;
        }
        trials.push(summary);
    }
    let aggregate = aggregate(&trials);
    Ok(PolicyRun {
        policy,
        trials,
        aggregate,
        trace,
    })
}
