use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{argmax, uniform_index, Action, Feedback};

/// Occupancy of the device's current target RIS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QState {
    TargetIdle = 0,
    TargetBusy = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QLearningConfig {
    pub learning_rate: f64,
    pub discount: f64,
    pub exploration: f64,
    /// Slots over which exploration halves: `ε_t = ε / (1 + t / half_life)`.
    pub exploration_half_life: f64,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            discount: 0.9,
            exploration: 0.1,
            exploration_half_life: 10_000.0,
        }
    }
}

impl QLearningConfig {
    pub fn exploration_at(&self, slot: u64) -> f64 {
        if self.exploration_half_life > 0.0 {
            self.exploration / (1.0 + slot as f64 / self.exploration_half_life)
        } else {
            self.exploration
        }
    }
}

/// Action values per state. Idle rows span all `(ris, sf)` pairs, busy rows
/// span SFs on the direct link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub idle: Vec<f64>,
    pub busy: Vec<f64>,
}

impl QTable {
    pub fn new(idle_actions: usize, busy_actions: usize) -> Self {
        Self {
            idle: vec![0.0; idle_actions],
            busy: vec![0.0; busy_actions],
        }
    }

    pub fn row(&self, state: QState) -> &[f64] {
        match state {
            QState::TargetIdle => &self.idle,
            QState::TargetBusy => &self.busy,
        }
    }

    pub fn row_mut(&mut self, state: QState) -> &mut [f64] {
        match state {
            QState::TargetIdle => &mut self.idle,
            QState::TargetBusy => &mut self.busy,
        }
    }

    pub fn greedy(&self, state: QState) -> usize {
        argmax(self.row(state).iter().copied()).unwrap_or(0)
    }

    pub fn max_value(&self, state: QState) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// ε-greedy action for `state`.
pub fn q_learning_step<R: Rng + ?Sized>(table: &QTable, state: QState, exploration: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < exploration {
        uniform_index(table.row(state).len(), rng)
    } else {
        table.greedy(state)
    }
}

/// One temporal-difference update.
pub fn q_update(
    table: &mut QTable,
    state: QState,
    action: usize,
    reward: f64,
    next: QState,
    learning_rate: f64,
    discount: f64,
) {
    let target = reward + discount * table.max_value(next);
    let q = &mut table.row_mut(state)[action];
    *q += learning_rate * (target - *q);
}

/// Tabular Q-learning device.
///
/// The target RIS is the one used by the greedy idle-state action. Rewards
/// are normalized by the fastest rate. Updates are applied once the next
/// state is sensed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLearner {
    pub config: QLearningConfig,
    pub table: QTable,
    n_sf: usize,
    top_rate: f64,
    slot: u64,
    last: Option<(QState, usize)>,
    last_reward: Option<f64>,
}

impl QLearner {
    pub fn new(config: QLearningConfig, n_ris: usize, rates: &[f64]) -> Self {
        Self {
            config,
            table: QTable::new(n_ris * rates.len(), rates.len()),
            n_sf: rates.len(),
            top_rate: rates[0],
            slot: 0,
            last: None,
            last_reward: None,
        }
    }

    pub fn target_ris(&self) -> usize {
        self.table.greedy(QState::TargetIdle) / self.n_sf
    }

    pub fn decide<R: Rng + ?Sized>(&mut self, busy: impl Fn(usize) -> bool, rng: &mut R) -> Action {
        let state = if busy(self.target_ris()) {
            QState::TargetBusy
        } else {
            QState::TargetIdle
        };
        if let (Some((s, a)), Some(r)) = (self.last, self.last_reward.take()) {
            q_update(
                &mut self.table,
                s,
                a,
                r,
                state,
                self.config.learning_rate,
                self.config.discount,
            );
        }
        let eps = self.config.exploration_at(self.slot);
        let a = q_learning_step(&self.table, state, eps, rng);
        self.last = Some((state, a));
        self.slot += 1;
        match state {
            QState::TargetBusy => Action::Direct { sf: a },
            QState::TargetIdle => {
                let (ris, sf) = (a / self.n_sf, a % self.n_sf);
                if busy(ris) {
                    Action::Direct { sf }
                } else {
                    Action::Ris { ris, sf }
                }
            }
        }
    }

    pub fn observe(&mut self, _feedback: Feedback, reward: f64) {
        self.last_reward = Some(reward / self.top_rate);
    }
}
