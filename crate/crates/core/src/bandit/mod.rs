//! Per-device learning machinery.
//!
//! A learner alternates three phases per epoch: ε-greedy exploration over
//! RISs, a content/discontent game that settles on a collision-free RIS,
//! and Thompson sampling over spreading factors on the chosen RIS.

pub mod cluster;
pub mod game;
pub mod learner;
pub mod schedule;
pub mod thompson;
pub mod wasserstein;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use cluster::{cluster_round_robin, kmeans, ClusterSchedule, KMeansResult};
pub use game::{best_ris, game_step, game_transition, record_content_play, FHistory, GameState, Mood};
pub use learner::{ArmSpace, Exploitation, Exploration, Learner, LearnerConfig, Phase, Phase1Stats};
pub use schedule::EpochSchedule;
pub use thompson::{best_sf, ts_select, ts_update, BetaPosterior};
pub use wasserstein::{adapt_epsilon, pmf, wasserstein1};

/// What a device transmits in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "snake_case")]
pub enum Action {
    /// Through RIS `ris` with spreading factor index `sf`.
    Ris { ris: usize, sf: usize },
    /// Straight to the BS with spreading factor index `sf`.
    Direct { sf: usize },
}

impl Action {
    pub fn sf(&self) -> usize {
        match *self {
            Action::Ris { sf, .. } | Action::Direct { sf } => sf,
        }
    }

    pub fn ris(&self) -> Option<usize> {
        match *self {
            Action::Ris { ris, .. } => Some(ris),
            Action::Direct { .. } => None,
        }
    }
}

/// Per-slot outcome as seen by the transmitting device.
///
/// `Collision` and `Busy` carry no acknowledgement, which keeps them
/// distinguishable from `Failure`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    Success,
    Failure,
    Collision,
    Busy,
}

impl Feedback {
    pub fn from_success(success: bool) -> Self {
        if success {
            Feedback::Success
        } else {
            Feedback::Failure
        }
    }

    /// True when the slot produced an acknowledgement bit.
    pub fn has_ack(&self) -> bool {
        matches!(self, Feedback::Success | Feedback::Failure)
    }
}

/// Uniform index in `0..n` that draws nothing from `rng` when `n == 1`.
pub fn uniform_index<R: Rng + ?Sized>(n: usize, rng: &mut R) -> usize {
    debug_assert!(n >= 1);
    if n <= 1 {
        0
    } else {
        rng.random_range(0..n)
    }
}

/// Index of the largest value, lowest index on ties. NaN entries are
/// skipped; `None` when nothing remains.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            _ if v.is_nan() => {}
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
