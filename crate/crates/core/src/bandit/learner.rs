//! Epoch-driven learner state machine.
//!
//! One engine covers the main algorithm and its ablations. The variants
//! differ in the space explored by the first two phases (RIS only, or
//! every RIS/SF pair), in how the exploration rate evolves, and in whether
//! the third phase runs Thompson sampling or replays the game winner.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::game::{best_ris, game_step, game_transition, record_content_play, FHistory, GameState, Mood};
use super::thompson::{best_sf, ts_select, ts_update, BetaPosterior};
use super::wasserstein::adapt_epsilon;
use super::{uniform_index, Action, EpochSchedule, Feedback};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmSpace {
    /// Arms are RISs; the SF is learned separately.
    Ris,
    /// Arms are `(ris, sf)` pairs, indexed `ris * M + sf`.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exploration {
    /// Starts at 1 and follows the W1 distance between successive
    /// content-play histograms.
    Adaptive,
    /// Constant exploration probability.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exploitation {
    /// Thompson sampling over SFs on the chosen RIS.
    Thompson,
    /// Replay the arm that won the game.
    GameWinner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub schedule: EpochSchedule,
    pub eps_game: f64,
    pub nu: f64,
    pub arm_space: ArmSpace,
    pub exploration: Exploration,
    pub exploitation: Exploitation,
}

impl LearnerConfig {
    pub const DEFAULT_EPS_GAME: f64 = 0.01;
    pub const DEFAULT_NU: f64 = 1.4;

    pub fn e2boost(schedule: EpochSchedule) -> Self {
        Self {
            schedule,
            eps_game: Self::DEFAULT_EPS_GAME,
            nu: Self::DEFAULT_NU,
            arm_space: ArmSpace::Ris,
            exploration: Exploration::Adaptive,
            exploitation: Exploitation::Thompson,
        }
    }

    pub fn fixed_eps(schedule: EpochSchedule, eps: f64) -> Self {
        Self {
            exploration: Exploration::Fixed(eps),
            ..Self::e2boost(schedule)
        }
    }

    pub fn no_thompson(schedule: EpochSchedule) -> Self {
        Self {
            arm_space: ArmSpace::Joint,
            exploitation: Exploitation::GameWinner,
            ..Self::e2boost(schedule)
        }
    }

    pub fn got(schedule: EpochSchedule) -> Self {
        Self {
            arm_space: ArmSpace::Joint,
            exploration: Exploration::Fixed(1.0),
            exploitation: Exploitation::GameWinner,
            ..Self::e2boost(schedule)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Explore,
    Game,
    Exploit,
}

/// Exploration counters. They accumulate across epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase1Stats {
    pub visits: Vec<u64>,
    pub successes: Vec<u64>,
    pub estimates: Vec<f64>,
}

impl Phase1Stats {
    pub fn new(n_arms: usize) -> Self {
        Self {
            visits: vec![0; n_arms],
            successes: vec![0; n_arms],
            estimates: vec![0.0; n_arms],
        }
    }

    /// Records an exploration outcome; only acknowledged slots count.
    pub fn update(&mut self, arm: usize, feedback: Feedback) {
        if feedback.has_ack() {
            self.visits[arm] += 1;
            if feedback == Feedback::Success {
                self.successes[arm] += 1;
            }
        }
    }

    /// Refreshes `Q/V` estimates, zero for unvisited arms.
    pub fn finalize(&mut self) -> &[f64] {
        for ((e, &v), &q) in self.estimates.iter_mut().zip(&self.visits).zip(&self.successes) {
            *e = if v == 0 { 0.0 } else { q as f64 / v as f64 };
        }
        &self.estimates
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SlotRole {
    Explore {
        arm: usize,
    },
    Game {
        arm: usize,
    },
    Exploit,
    /// The targeted RIS was busy; the slot went to the direct link.
    Fallback,
    /// Slot outside the learner's own schedule, direct link only.
    DirectOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Pending {
    role: SlotRole,
    action: Action,
}

/// State of one learning device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Learner {
    config: LearnerConfig,
    n_ris: usize,
    rates: Vec<f64>,
    epoch: u32,
    phase: Phase,
    slot_in_phase: u64,
    eps_explore: f64,
    stats: Phase1Stats,
    game: GameState,
    history: FHistory,
    ris_posterior: BetaPosterior,
    direct_posterior: BetaPosterior,
    best_arm: usize,
    best_sf: usize,
    pending: Option<Pending>,
}

impl Learner {
    /// New learner at epoch 1. The initial greedy arm is drawn uniformly.
    pub fn new<R: Rng + ?Sized>(config: LearnerConfig, n_ris: usize, rates: Vec<f64>, rng: &mut R) -> Self {
        assert!(
            n_ris >= 1 && !rates.is_empty(),
            "learner needs at least one RIS and one SF"
        );
        let n_sf = rates.len();
        let n_arms = match config.arm_space {
            ArmSpace::Ris => n_ris,
            ArmSpace::Joint => n_ris * n_sf,
        };
        let eps_explore = match config.exploration {
            Exploration::Adaptive => 1.0,
            Exploration::Fixed(v) => v.clamp(0.0, 1.0),
        };
        let best_arm = uniform_index(n_arms, rng);
        Self {
            config,
            n_ris,
            epoch: 1,
            phase: Phase::Explore,
            slot_in_phase: 0,
            eps_explore,
            stats: Phase1Stats::new(n_arms),
            game: GameState::new(config.eps_game, config.nu),
            history: FHistory::new(n_arms),
            ris_posterior: BetaPosterior::new(n_sf),
            direct_posterior: BetaPosterior::new(n_sf),
            best_arm,
            best_sf: 0,
            pending: None,
            rates,
        }
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }
    pub fn epoch(&self) -> u32 {
        self.epoch
    }
    pub fn phase(&self) -> Phase {
        self.phase
    }
    pub fn slot_in_phase(&self) -> u64 {
        self.slot_in_phase
    }
    pub fn eps_explore(&self) -> f64 {
        self.eps_explore
    }
    pub fn stats(&self) -> &Phase1Stats {
        &self.stats
    }
    pub fn game(&self) -> &GameState {
        &self.game
    }
    pub fn history(&self) -> &FHistory {
        &self.history
    }
    pub fn ris_posterior(&self) -> &BetaPosterior {
        &self.ris_posterior
    }
    pub fn direct_posterior(&self) -> &BetaPosterior {
        &self.direct_posterior
    }
    pub fn n_arms(&self) -> usize {
        self.stats.visits.len()
    }

    /// Current greedy arm in the learner's arm space.
    pub fn best_arm(&self) -> usize {
        self.best_arm
    }

    pub fn best_sf(&self) -> usize {
        match self.config.arm_space {
            ArmSpace::Ris => self.best_sf,
            ArmSpace::Joint => self.best_arm % self.rates.len(),
        }
    }

    pub fn best_ris(&self) -> usize {
        self.arm_ris(self.best_arm)
    }

    fn arm_ris(&self, arm: usize) -> usize {
        match self.config.arm_space {
            ArmSpace::Ris => arm,
            ArmSpace::Joint => arm / self.rates.len(),
        }
    }

    fn phase_len(&self) -> u64 {
        let s = &self.config.schedule;
        match self.phase {
            Phase::Explore => s.explore_len(self.epoch),
            Phase::Game => s.game_len(self.epoch),
            Phase::Exploit => s.exploit_len(self.epoch),
        }
    }

    /// SF used alongside an RIS-space arm outside the exploitation phase.
    fn exploring_sf<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.epoch == 1 {
            uniform_index(self.rates.len(), rng)
        } else {
            self.best_sf
        }
    }

    fn arm_action<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Action {
        match self.config.arm_space {
            ArmSpace::Ris => Action::Ris {
                ris: arm,
                sf: self.exploring_sf(rng),
            },
            ArmSpace::Joint => {
                let m = self.rates.len();
                Action::Ris {
                    ris: arm / m,
                    sf: arm % m,
                }
            }
        }
    }

    fn fallback<R: Rng + ?Sized>(&self, intended_sf: usize, rng: &mut R) -> Action {
        match self.config.exploitation {
            Exploitation::Thompson => Action::Direct {
                sf: ts_select(&self.direct_posterior, &self.rates, rng),
            },
            Exploitation::GameWinner => Action::Direct { sf: intended_sf },
        }
    }

    /// Exploration-phase choice: `(arm, action)` before sensing.
    pub fn phase1_select<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, Action) {
        let explore = rng.random::<f64>() < self.eps_explore;
        let arm = if explore {
            uniform_index(self.n_arms(), rng)
        } else {
            self.best_arm
        };
        (arm, self.arm_action(arm, rng))
    }

    /// Chooses this slot's transmission. `busy(k)` reports whether RIS `k`
    /// is occupied.
    pub fn decide<R: Rng + ?Sized>(&mut self, busy: impl Fn(usize) -> bool, rng: &mut R) -> Action {
        let (role, action) = match self.phase {
            Phase::Explore => {
                let (arm, action) = self.phase1_select(rng);
                (SlotRole::Explore { arm }, action)
            }
            Phase::Game => {
                let arm = game_step(&self.game, self.n_arms(), rng);
                (SlotRole::Game { arm }, self.arm_action(arm, rng))
            }
            Phase::Exploit => {
                let ris = self.best_ris();
                let action = match self.config.exploitation {
                    Exploitation::Thompson if busy(ris) => Action::Direct {
                        sf: ts_select(&self.direct_posterior, &self.rates, rng),
                    },
                    Exploitation::Thompson => Action::Ris {
                        ris,
                        sf: ts_select(&self.ris_posterior, &self.rates, rng),
                    },
                    Exploitation::GameWinner if busy(ris) => Action::Direct { sf: self.best_sf() },
                    Exploitation::GameWinner => Action::Ris {
                        ris,
                        sf: self.best_sf(),
                    },
                };
                (SlotRole::Exploit, action)
            }
        };
        let (role, action) = match (role, action) {
            (SlotRole::Explore { .. } | SlotRole::Game { .. }, Action::Ris { ris, sf }) if busy(ris) => {
                (SlotRole::Fallback, self.fallback(sf, rng))
            }
            other => other,
        };
        self.pending = Some(Pending { role, action });
        action
    }

    /// Direct-link Thompson step that leaves the epoch cursor untouched.
    pub fn decide_direct_only<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Action {
        let action = Action::Direct {
            sf: ts_select(&self.direct_posterior, &self.rates, rng),
        };
        self.pending = Some(Pending {
            role: SlotRole::DirectOnly,
            action,
        });
        action
    }

    /// Feeds back the outcome of the last decided slot and advances the
    /// cursor.
    pub fn observe<R: Rng + ?Sized>(&mut self, feedback: Feedback, rng: &mut R) {
        let Some(Pending { role, action }) = self.pending.take() else {
            return;
        };
        match role {
            SlotRole::DirectOnly => {
                ts_update(&mut self.direct_posterior, action.sf(), feedback);
                return;
            }
            SlotRole::Fallback | SlotRole::Exploit if matches!(action, Action::Direct { .. }) => {
                if self.config.exploitation == Exploitation::Thompson {
                    ts_update(&mut self.direct_posterior, action.sf(), feedback);
                }
            }
            SlotRole::Fallback => {}
            SlotRole::Exploit => {
                if self.config.exploitation == Exploitation::Thompson {
                    ts_update(&mut self.ris_posterior, action.sf(), feedback);
                }
            }
            SlotRole::Explore { arm } => self.stats.update(arm, feedback),
            SlotRole::Game { arm } => {
                let u = match feedback {
                    Feedback::Success | Feedback::Failure => self.utility(arm),
                    Feedback::Collision | Feedback::Busy => 0.0,
                };
                game_transition(&mut self.game, arm, u, rng);
                record_content_play(&mut self.history, arm, self.game.mood);
            }
        }
        self.slot_in_phase += 1;
        if self.slot_in_phase >= self.phase_len() {
            self.end_phase(rng);
        }
    }

    /// Game utility of `arm` from the current exploration estimates.
    pub fn utility(&self, arm: usize) -> f64 {
        let theta = self.stats.estimates[arm];
        match self.config.arm_space {
            ArmSpace::Ris => theta,
            ArmSpace::Joint => theta * self.rates[arm % self.rates.len()] / self.rates[0],
        }
    }

    fn end_phase<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.slot_in_phase = 0;
        match self.phase {
            Phase::Explore => {
                self.stats.finalize();
                self.game.u_max = (0..self.n_arms()).map(|a| self.utility(a)).fold(0.0, f64::max);
                self.game.mood = Mood::Content;
                let z = self.epoch;
                let lookup = (z - z / 2).checked_sub(1).filter(|&e| e >= 1);
                self.game.baseline = match lookup.and_then(|e| self.history.record(e)).and_then(|r| r.last_play) {
                    Some(arm) => arm,
                    None => uniform_index(self.n_arms(), rng),
                };
                self.history.begin_epoch(z);
                self.phase = Phase::Game;
            }
            Phase::Game => {
                let z = self.epoch;
                self.best_arm = best_ris(&self.history, z);
                match self.config.exploration {
                    Exploration::Adaptive if z >= 2 => {
                        let previous = self.history.counts(z - 1).map(<[u64]>::to_vec);
                        self.eps_explore = match previous {
                            Some(prev) => adapt_epsilon(&self.history.current.counts, &prev),
                            None => 1.0,
                        };
                    }
                    Exploration::Adaptive => {}
                    Exploration::Fixed(v) => self.eps_explore = v.clamp(0.0, 1.0),
                }
                self.history.finish_epoch();
                self.phase = Phase::Exploit;
            }
            Phase::Exploit => {
                if self.config.exploitation == Exploitation::Thompson {
                    self.best_sf = best_sf(&self.ris_posterior, &self.rates);
                }
                self.epoch += 1;
                self.phase = Phase::Explore;
            }
        }
    }
}
