//! Content/discontent game dynamics and the content-play history.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, uniform_index};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mood {
    Content,
    Discontent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub mood: Mood,
    pub baseline: usize,
    pub utility: f64,
    pub u_max: f64,
    pub eps_game: f64,
    pub nu: f64,
}

impl GameState {
    pub fn new(eps_game: f64, nu: f64) -> Self {
        Self {
            mood: Mood::Content,
            baseline: 0,
            utility: 0.0,
            u_max: 0.0,
            eps_game,
            nu,
        }
    }

    /// Probability that a content player deviates from its baseline.
    pub fn deviation_prob(&self) -> f64 {
        self.eps_game.powf(self.nu)
    }
}

/// Picks the arm to play this game slot.
///
/// A content player keeps its baseline with probability `1 - ε^ν` and
/// otherwise tries one of the other arms uniformly. A discontent player
/// picks uniformly among all arms.
pub fn game_step<R: Rng + ?Sized>(state: &GameState, n_arms: usize, rng: &mut R) -> usize {
    match state.mood {
        Mood::Discontent => uniform_index(n_arms, rng),
        Mood::Content => {
            if n_arms == 1 || rng.random::<f64>() >= state.deviation_prob() {
                state.baseline
            } else {
                let other = uniform_index(n_arms - 1, rng);
                if other >= state.baseline {
                    other + 1
                } else {
                    other
                }
            }
        }
    }
}

/// Updates mood and baseline after playing `played` with utility `u`.
pub fn game_transition<R: Rng + ?Sized>(state: &mut GameState, played: usize, u: f64, rng: &mut R) {
    state.utility = u;
    if state.mood == Mood::Content && played == state.baseline && u > 0.0 {
        return;
    }
    let accept = if state.u_max > 0.0 && u > 0.0 {
        (u / state.u_max) * state.eps_game.powf(state.u_max - u)
    } else {
        0.0
    };
    let draw: f64 = rng.random();
    state.baseline = played;
    state.mood = if draw < accept { Mood::Content } else { Mood::Discontent };
}

/// Content-play counts of one epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    pub counts: Vec<u64>,
    /// Last arm played during the epoch's game phase.
    pub last_play: Option<usize>,
}

/// Rolling window of per-epoch content-play histograms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FHistory {
    pub n_arms: usize,
    pub current: EpochRecord,
    pub past: VecDeque<EpochRecord>,
}

impl FHistory {
    pub fn new(n_arms: usize) -> Self {
        Self {
            n_arms,
            current: EpochRecord {
                epoch: 1,
                counts: vec![0; n_arms],
                last_play: None,
            },
            past: VecDeque::new(),
        }
    }

    /// Starts a fresh histogram for `epoch`.
    pub fn begin_epoch(&mut self, epoch: u32) {
        self.current = EpochRecord {
            epoch,
            counts: vec![0; self.n_arms],
            last_play: None,
        };
    }

    /// Files the current histogram and drops epochs no longer needed by
    /// the window or by the baseline lookup.
    pub fn finish_epoch(&mut self) {
        let z = self.current.epoch;
        self.past.push_back(self.current.clone());
        let oldest_needed = (z + 1).saturating_sub(z.div_ceil(2) + 1);
        while self.past.front().is_some_and(|r| r.epoch < oldest_needed) {
            self.past.pop_front();
        }
    }

    pub fn record(&self, epoch: u32) -> Option<&EpochRecord> {
        if self.current.epoch == epoch {
            return Some(&self.current);
        }
        self.past.iter().rev().find(|r| r.epoch == epoch)
    }

    pub fn counts(&self, epoch: u32) -> Option<&[u64]> {
        self.record(epoch).map(|r| r.counts.as_slice())
    }

    /// Summed counts over epochs `z - ⌊z/2⌋ ..= z`.
    pub fn window_sum(&self, z: u32) -> Vec<u64> {
        let mut sum = vec![0; self.n_arms];
        for epoch in (z - z / 2)..=z {
            if let Some(counts) = self.counts(epoch) {
                for (s, c) in sum.iter_mut().zip(counts) {
                    *s += c;
                }
            }
        }
        sum
    }
}

/// Counts a game play towards the current histogram when the player is
/// content after the transition.
pub fn record_content_play(history: &mut FHistory, arm: usize, mood: Mood) {
    history.current.last_play = Some(arm);
    if mood == Mood::Content {
        history.current.counts[arm] += 1;
    }
}

/// Arm with the most content plays over the trailing window ending at `z`.
pub fn best_ris(history: &FHistory, z: u32) -> usize {
    argmax(history.window_sum(z).into_iter().map(|c| c as f64)).unwrap_or(0)
}
