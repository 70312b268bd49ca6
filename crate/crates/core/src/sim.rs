//! Slotted multi-device environment and trial runner.
//!
//! Each slot has two steps. First every device decides, knowing which RISs
//! are occupied. Then the environment resolves collisions, draws feedback
//! and every device observes its own outcome.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{cluster_round_robin, Action, ClusterSchedule, EpochSchedule, Feedback, Learner, LearnerConfig};
use crate::baselines::{FixedPlayer, OptimalProfile, PolicySpec, QLearner, QLearningConfig, RandomPlayer};
use crate::channel::{ChannelModel, SuccessProbTable};
use crate::netmodel::Position3D;
use crate::Error;

/// Everything the environment needs to score a slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub table: SuccessProbTable,
    pub rates: Vec<f64>,
    pub active_prob: Vec<f64>,
    /// When set, feedback comes from fresh channel draws instead of the
    /// success table.
    pub channel: Option<ChannelModel>,
}

impl Environment {
    pub fn new(table: SuccessProbTable, rates: Vec<f64>, active_prob: Vec<f64>) -> Result<Self, Error> {
        if rates.len() != table.n_sf || active_prob.len() != table.n_ris {
            return Err(Error::Invalid(
                "environment dimensions do not match the success table".into(),
            ));
        }
        Ok(Self {
            table,
            rates,
            active_prob,
            channel: None,
        })
    }

    pub fn with_channel(mut self, channel: ChannelModel) -> Self {
        self.channel = Some(channel);
        self
    }

    pub fn n_players(&self) -> usize {
        self.table.n_devices
    }
    pub fn n_ris(&self) -> usize {
        self.table.n_ris
    }
    pub fn n_sf(&self) -> usize {
        self.table.n_sf
    }

    /// Expected reward of an action that was not blocked.
    pub fn mean_reward(&self, n: usize, action: Action) -> f64 {
        match action {
            Action::Ris { ris, sf } => self.rates[sf] * self.table.ris(n, ris, sf),
            Action::Direct { sf } => self.rates[sf] * self.table.direct(n, sf),
        }
    }

    fn draw_success<R: Rng + ?Sized>(&self, n: usize, action: Action, rng: &mut R) -> bool {
        match (&self.channel, action) {
            (Some(ch), Action::Ris { ris, sf }) => ch.sample_ris_sinr(n, ris, rng) >= ch.thresholds[sf],
            (Some(ch), Action::Direct { sf }) => ch.sample_direct_sinr(n, rng) >= ch.thresholds[sf],
            (None, Action::Ris { ris, sf }) => rng.random::<f64>() < self.table.ris(n, ris, sf),
            (None, Action::Direct { sf }) => rng.random::<f64>() < self.table.direct(n, sf),
        }
    }
}

/// Independent per-slot Bernoulli occupancy of each RIS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyProcess {
    pub active_prob: Vec<f64>,
}

impl OccupancyProcess {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, busy: &mut [bool]) {
        for (b, &p) in busy.iter_mut().zip(&self.active_prob) {
            *b = rng.random::<f64>() < p;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerOutcome {
    pub action: Action,
    pub feedback: Feedback,
    /// Realized reward in bits per second.
    pub reward: f64,
    /// Expected reward of the action given whether it was blocked.
    pub expected: f64,
}

impl PlayerOutcome {
    /// Collision indicator: false when the transmission was blocked.
    pub fn delivered(&self) -> bool {
        self.feedback.has_ack()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub players: Vec<PlayerOutcome>,
}

/// Resolves one slot.
///
/// An RIS transmission is blocked when the RIS is occupied or when two or
/// more devices target it. Blocked devices receive no acknowledgement and
/// no reward. Every other transmission succeeds with its arm's success
/// probability.
pub fn resolve_slot<R: Rng + ?Sized>(
    env: &Environment,
    actions: &[Action],
    busy: &[bool],
    rng: &mut R,
    out: &mut SlotOutcome,
) {
    let mut load = vec![0u32; env.n_ris()];
    for a in actions {
        if let Action::Ris { ris, .. } = *a {
            if !busy[ris] {
                load[ris] += 1;
            }
        }
    }
    out.players.clear();
    for (n, &action) in actions.iter().enumerate() {
        let blocked = match action {
            Action::Ris { ris, .. } if busy[ris] => Some(Feedback::Busy),
            Action::Ris { ris, .. } if load[ris] >= 2 => Some(Feedback::Collision),
            _ => None,
        };
        let outcome = match blocked {
            Some(feedback) => PlayerOutcome {
                action,
                feedback,
                reward: 0.0,
                expected: 0.0,
            },
            None => {
                let success = env.draw_success(n, action, rng);
                PlayerOutcome {
                    action,
                    feedback: Feedback::from_success(success),
                    reward: if success { env.rates[action.sf()] } else { 0.0 },
                    expected: env.mean_reward(n, action),
                }
            }
        };
        out.players.push(outcome);
    }
}

/// A device driven by one of the named policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum Player {
    Learner(Box<Learner>),
    QLearning(QLearner),
    Random(RandomPlayer),
    Fixed(FixedPlayer),
}

impl Player {
    pub fn decide<R: Rng + ?Sized>(&mut self, busy: &[bool], rng: &mut R) -> Action {
        let sense = |k: usize| busy[k];
        match self {
            Player::Learner(l) => l.decide(sense, rng),
            Player::QLearning(q) => q.decide(sense, rng),
            Player::Random(r) => r.decide(sense, rng),
            Player::Fixed(f) => f.decide(sense),
        }
    }

    /// Decision for a slot in which the device is not the active member of
    /// its cluster.
    pub fn decide_direct_only<R: Rng + ?Sized>(&mut self, busy: &[bool], rng: &mut R) -> Action {
        match self {
            Player::Learner(l) => l.decide_direct_only(rng),
            other => other.decide(busy, rng),
        }
    }

    pub fn observe<R: Rng + ?Sized>(&mut self, outcome: &PlayerOutcome, rng: &mut R) {
        match self {
            Player::Learner(l) => l.observe(outcome.feedback, rng),
            Player::QLearning(q) => q.observe(outcome.feedback, outcome.reward),
            Player::Random(_) | Player::Fixed(_) => {}
        }
    }
}

/// Settings of a single trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub policy: PolicySpec,
    pub schedule: EpochSchedule,
    pub epochs: u32,
    /// Overrides the schedule-derived horizon when set.
    pub horizon: Option<u64>,
    pub seed: u64,
    pub trial: u64,
    pub eps_game: f64,
    pub nu: f64,
    pub qlearning: QLearningConfig,
    /// Cluster devices round-robin when they outnumber the RISs.
    pub clustering: bool,
    pub record_trace: bool,
    /// Elapsed-slot counts at which to snapshot the metrics.
    pub checkpoints: Vec<u64>,
    /// First slot counted in the windowed selection histogram.
    pub histogram_from: u64,
}

impl TrialConfig {
    pub fn new(policy: PolicySpec, schedule: EpochSchedule, epochs: u32, seed: u64) -> Self {
        Self {
            policy,
            schedule,
            epochs,
            horizon: None,
            seed,
            trial: 0,
            eps_game: LearnerConfig::DEFAULT_EPS_GAME,
            nu: LearnerConfig::DEFAULT_NU,
            qlearning: QLearningConfig::default(),
            clustering: true,
            record_trace: false,
            checkpoints: Vec::new(),
            histogram_from: 0,
        }
    }

    pub fn horizon(&self) -> u64 {
        self.horizon.unwrap_or_else(|| self.schedule.total_slots(self.epochs))
    }

    pub fn learner_config(&self) -> Option<LearnerConfig> {
        let base = match self.policy {
            PolicySpec::E2Boost => LearnerConfig::e2boost(self.schedule),
            PolicySpec::E2BoostNoTs => LearnerConfig::no_thompson(self.schedule),
            PolicySpec::E2BoostFixedEps(v) => LearnerConfig::fixed_eps(self.schedule, v),
            PolicySpec::Got => LearnerConfig::got(self.schedule),
            _ => return None,
        };
        Some(LearnerConfig {
            eps_game: self.eps_game,
            nu: self.nu,
            ..base
        })
    }

    fn uses_clustering(&self, n_players: usize, n_ris: usize) -> bool {
        self.clustering
            && n_players > n_ris
            && matches!(
                self.policy,
                PolicySpec::E2Boost | PolicySpec::E2BoostNoTs | PolicySpec::E2BoostFixedEps(_)
            )
    }
}

/// Stream identifiers within a trial.
pub mod streams {
    pub const ENVIRONMENT: u64 = 0;
    pub const CLUSTERING: u64 = 1;
    pub const FIRST_PLAYER: u64 = 2;
}

/// RNG for `stream` of `trial` under `seed`. Streams never overlap, so any
/// trial can be replayed on its own.
pub fn trial_rng(seed: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 24) | (stream & 0xFF_FFFF));
    rng
}

/// Snapshot of the running metrics after `slot` elapsed slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub slot: u64,
    /// Time-averaged expected sum throughput, bits per second.
    pub throughput: f64,
    /// Time-averaged realized sum throughput, bits per second.
    pub realized_throughput: f64,
    /// Cumulative pseudo-regret in bits per second times slots.
    pub pseudo_regret: f64,
    /// Cumulative realized regret against the benchmark.
    pub regret: f64,
}

/// Accumulated metrics of one trial.
///
/// Pull counts are kept per device, per benchmark state (whether the
/// device's optimal RIS was occupied) and per outcome arm. Outcome arms are
/// laid out as delivered RIS arms `k·M + m`, then blocked RIS arms, then
/// direct SFs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsLedger {
    pub n_players: usize,
    pub n_ris: usize,
    pub n_sf: usize,
    pub slots: u64,
    pub cumulative_reward: Vec<f64>,
    pub cumulative_expected: Vec<f64>,
    pub collisions: Vec<u64>,
    pub busy_slots: Vec<u64>,
    pub pulls: Vec<u64>,
    /// Chosen arm counts `[n][k·M + m]`, then direct `[n][K·M + m]`.
    pub selections: Vec<u64>,
    /// As `selections`, restricted to slots from `histogram_from` on.
    pub window_selections: Vec<u64>,
    pub histogram_from: u64,
    pub pseudo_regret: f64,
    pub regret: f64,
    pub checkpoints: Vec<Checkpoint>,
}

impl MetricsLedger {
    pub fn new(n_players: usize, n_ris: usize, n_sf: usize, histogram_from: u64) -> Self {
        let outcome_arms = 2 * n_ris * n_sf + n_sf;
        let choice_arms = n_ris * n_sf + n_sf;
        Self {
            n_players,
            n_ris,
            n_sf,
            slots: 0,
            cumulative_reward: vec![0.0; n_players],
            cumulative_expected: vec![0.0; n_players],
            collisions: vec![0; n_players],
            busy_slots: vec![0; n_players],
            pulls: vec![0; n_players * 2 * outcome_arms],
            selections: vec![0; n_players * choice_arms],
            window_selections: vec![0; n_players * choice_arms],
            histogram_from,
            pseudo_regret: 0.0,
            regret: 0.0,
            checkpoints: Vec::new(),
        }
    }

    pub fn outcome_arms(&self) -> usize {
        2 * self.n_ris * self.n_sf + self.n_sf
    }

    pub fn choice_arms(&self) -> usize {
        self.n_ris * self.n_sf + self.n_sf
    }

    pub fn choice_index(&self, action: Action) -> usize {
        match action {
            Action::Ris { ris, sf } => ris * self.n_sf + sf,
            Action::Direct { sf } => self.n_ris * self.n_sf + sf,
        }
    }

    pub fn choice_action(&self, index: usize) -> Action {
        let km = self.n_ris * self.n_sf;
        if index < km {
            Action::Ris {
                ris: index / self.n_sf,
                sf: index % self.n_sf,
            }
        } else {
            Action::Direct { sf: index - km }
        }
    }

    fn outcome_index(&self, o: &PlayerOutcome) -> usize {
        let km = self.n_ris * self.n_sf;
        match o.action {
            Action::Ris { ris, sf } if o.delivered() => ris * self.n_sf + sf,
            Action::Ris { ris, sf } => km + ris * self.n_sf + sf,
            Action::Direct { sf } => 2 * km + sf,
        }
    }

    /// Mean reward of outcome arm `i` for device `n`.
    pub fn outcome_mean(&self, env: &Environment, n: usize, i: usize) -> f64 {
        let km = self.n_ris * self.n_sf;
        if i < km {
            env.mean_reward(
                n,
                Action::Ris {
                    ris: i / self.n_sf,
                    sf: i % self.n_sf,
                },
            )
        } else if i < 2 * km {
            0.0
        } else {
            env.mean_reward(n, Action::Direct { sf: i - 2 * km })
        }
    }

    pub fn pull_count(&self, n: usize, state: usize, i: usize) -> u64 {
        self.pulls[(n * 2 + state) * self.outcome_arms() + i]
    }

    pub fn selection_row(&self, n: usize) -> &[u64] {
        let c = self.choice_arms();
        &self.selections[n * c..(n + 1) * c]
    }

    pub fn window_row(&self, n: usize) -> &[u64] {
        let c = self.choice_arms();
        &self.window_selections[n * c..(n + 1) * c]
    }

    /// Most selected arm in the windowed histogram, lowest index on ties.
    pub fn window_mode(&self, n: usize) -> Action {
        let row = self.window_row(n);
        let best = crate::bandit::argmax(row.iter().map(|&c| c as f64)).unwrap_or(0);
        self.choice_action(best)
    }

    pub fn record(&mut self, outcome: &SlotOutcome, benchmark_busy: &[bool], profile: &OptimalProfile) {
        let slot = self.slots;
        let arms = self.outcome_arms();
        let choices = self.choice_arms();
        let mut delta = 0.0;
        let mut shortfall = 0.0;
        for (n, o) in outcome.players.iter().enumerate() {
            let state = usize::from(benchmark_busy[n]);
            let idx = self.outcome_index(o);
            self.pulls[(n * 2 + state) * arms + idx] += 1;
            let choice = self.choice_index(o.action);
            self.selections[n * choices + choice] += 1;
            if slot >= self.histogram_from {
                self.window_selections[n * choices + choice] += 1;
            }
            match o.feedback {
                Feedback::Collision => self.collisions[n] += 1,
                Feedback::Busy => self.busy_slots[n] += 1,
                _ => {}
            }
            self.cumulative_reward[n] += o.reward;
            self.cumulative_expected[n] += o.expected;
            let bench = profile.benchmark(n, benchmark_busy[n]);
            delta += bench - o.expected;
            shortfall += bench - o.reward;
        }
        self.pseudo_regret += delta;
        self.regret += shortfall;
        self.slots += 1;
    }

    pub fn checkpoint(&mut self) {
        let t = self.slots.max(1) as f64;
        self.checkpoints.push(Checkpoint {
            slot: self.slots,
            throughput: self.cumulative_expected.iter().sum::<f64>() / t,
            realized_throughput: self.cumulative_reward.iter().sum::<f64>() / t,
            pseudo_regret: self.pseudo_regret,
            regret: self.regret,
        });
    }

    /// Time-averaged expected sum throughput so far.
    pub fn mean_sum_throughput(&self) -> f64 {
        if self.slots == 0 {
            0.0
        } else {
            self.cumulative_expected.iter().sum::<f64>() / self.slots as f64
        }
    }
}

/// Pseudo-regret from pull counts: `Σ_n Σ_s Σ_i (μ*_{n,s} - μ_{n,i}) W_{n,s,i}`.
pub fn compute_pseudo_regret(ledger: &MetricsLedger, env: &Environment, profile: &OptimalProfile) -> f64 {
    let mut total = 0.0;
    for n in 0..ledger.n_players {
        for state in 0..2 {
            let bench = profile.benchmark(n, state == 1);
            for i in 0..ledger.outcome_arms() {
                let w = ledger.pull_count(n, state, i);
                if w > 0 {
                    total += (bench - ledger.outcome_mean(env, n, i)) * w as f64;
                }
            }
        }
    }
    total
}

/// One row of the per-slot trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub slot: u64,
    pub player: usize,
    pub action: Action,
    pub feedback: Feedback,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutput {
    pub ledger: MetricsLedger,
    pub trace: Vec<TraceRow>,
    pub clusters: Option<ClusterSchedule>,
    /// Number of slots in which the count of active cluster members
    /// differed from the number of clusters.
    pub rotation_faults: u64,
    pub players: Vec<Player>,
}

/// Builds the devices of a trial.
pub fn build_players(
    cfg: &TrialConfig,
    env: &Environment,
    profile: &OptimalProfile,
    rngs: &mut [ChaCha8Rng],
) -> Vec<Player> {
    let (k, rates) = (env.n_ris(), &env.rates);
    rngs.iter_mut()
        .enumerate()
        .map(|(n, rng)| match (cfg.policy, cfg.learner_config()) {
            (_, Some(lc)) => Player::Learner(Box::new(Learner::new(lc, k, rates.clone(), rng))),
            (PolicySpec::QLearning, _) => Player::QLearning(QLearner::new(cfg.qlearning, k, rates)),
            (PolicySpec::Random, _) => Player::Random(RandomPlayer {
                n_ris: k,
                n_sf: rates.len(),
            }),
            _ => Player::Fixed(FixedPlayer {
                action: profile.assignment[n],
                direct_sf: profile.direct_sf[n],
            }),
        })
        .collect()
}

/// Runs one trial. `devices` positions are used for clustering only.
pub fn run_trial(
    cfg: &TrialConfig,
    env: &Environment,
    profile: &OptimalProfile,
    devices: &[Position3D],
) -> Result<TrialOutput, Error> {
    let n = env.n_players();
    if devices.len() != n || profile.assignment.len() != n {
        return Err(Error::Invalid(
            "device count differs between scenario, oracle and profile".into(),
        ));
    }
    let horizon = cfg.horizon();
    let mut env_rng = trial_rng(cfg.seed, cfg.trial, streams::ENVIRONMENT);
    let mut rngs: Vec<ChaCha8Rng> = (0..n as u64)
        .map(|p| trial_rng(cfg.seed, cfg.trial, streams::FIRST_PLAYER + p))
        .collect();
    let clusters = if cfg.uses_clustering(n, env.n_ris()) {
        let mut rng = trial_rng(cfg.seed, cfg.trial, streams::CLUSTERING);
        Some(cluster_round_robin(devices, env.n_ris(), &mut rng)?)
    } else {
        None
    };
    let mut players = build_players(cfg, env, profile, &mut rngs);
    let occupancy = OccupancyProcess {
        active_prob: env.active_prob.clone(),
    };
    let mut ledger = MetricsLedger::new(n, env.n_ris(), env.n_sf(), cfg.histogram_from);
    let mut checkpoints = cfg
        .checkpoints
        .iter()
        .copied()
        .filter(|&c| c >= 1 && c <= horizon)
        .peekable();

    let mut busy = vec![false; env.n_ris()];
    let mut bench_busy = vec![false; n];
    let mut actions = vec![Action::Direct { sf: 0 }; n];
    let mut outcome = SlotOutcome {
        players: Vec::with_capacity(n),
    };
    let mut trace = Vec::new();
    let mut rotation_faults = 0;

    for slot in 0..horizon {
        occupancy.sample(&mut env_rng, &mut busy);
        let mut active = 0;
        for (p, player) in players.iter_mut().enumerate() {
            let flagged = clusters.as_ref().is_none_or(|c| c.is_flagged(p, slot));
            active += usize::from(flagged);
            actions[p] = if flagged {
                player.decide(&busy, &mut rngs[p])
            } else {
                player.decide_direct_only(&busy, &mut rngs[p])
            };
        }
        if let Some(c) = &clusters {
            if active != c.members.iter().filter(|m| !m.is_empty()).count() {
                rotation_faults += 1;
            }
        }
        resolve_slot(env, &actions, &busy, &mut env_rng, &mut outcome);
        for (p, player) in players.iter_mut().enumerate() {
            player.observe(&outcome.players[p], &mut rngs[p]);
            bench_busy[p] = match profile.assignment[p] {
                Action::Ris { ris, .. } => busy[ris],
                Action::Direct { .. } => false,
            };
        }
        ledger.record(&outcome, &bench_busy, profile);
        if cfg.record_trace {
            trace.extend(outcome.players.iter().enumerate().map(|(p, o)| TraceRow {
                slot,
                player: p,
                action: o.action,
                feedback: o.feedback,
                reward: o.reward,
            }));
        }
        if checkpoints.peek() == Some(&ledger.slots) {
            ledger.checkpoint();
            while checkpoints.peek().is_some_and(|&c| c <= ledger.slots) {
                checkpoints.next();
            }
        }
    }
    Ok(TrialOutput {
        ledger,
        trace,
        clusters,
        rotation_faults,
        players,
    })
}

/// Mean and standard error of the mean. The error is zero for one sample.
pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Column-wise mean and standard error of equally long series.
pub fn aggregate_series(series: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    let mut column = Vec::with_capacity(series.len());
    (0..len)
        .map(|t| {
            column.clear();
            column.extend(series.iter().map(|s| s[t]));
            mean_stderr(&column)
        })
        .collect()
}
