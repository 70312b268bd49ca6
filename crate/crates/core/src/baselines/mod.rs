//! Reference policies: the centralized optimum, tabular Q-learning, uniform
//! random choice and the named learner variants.

pub mod hungarian;
pub mod qlearning;

use alloc::format;
use alloc::string::{String, ToString};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{uniform_index, Action};
use crate::Error;

pub use hungarian::{
    genie_optimal_sf, hungarian_assign, solve_max_assignment, AssignmentMatrix, AssignmentResult, OptimalProfile,
};
pub use qlearning::{q_learning_step, q_update, QLearner, QLearningConfig, QState, QTable};

/// Uniform arm in `0..size`.
pub fn random_step<R: Rng + ?Sized>(size: usize, rng: &mut R) -> usize {
    uniform_index(size, rng)
}

/// Picks a uniformly random `(ris, sf)` pair each slot and goes direct with
/// the same SF when that RIS is busy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomPlayer {
    pub n_ris: usize,
    pub n_sf: usize,
}

impl RandomPlayer {
    pub fn decide<R: Rng + ?Sized>(&self, busy: impl Fn(usize) -> bool, rng: &mut R) -> Action {
        let arm = random_step(self.n_ris * self.n_sf, rng);
        let (ris, sf) = (arm / self.n_sf, arm % self.n_sf);
        if busy(ris) {
            Action::Direct { sf }
        } else {
            Action::Ris { ris, sf }
        }
    }
}

/// Plays a fixed assignment, switching to a fixed direct SF whenever the
/// assigned RIS is busy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPlayer {
    pub action: Action,
    pub direct_sf: usize,
}

impl FixedPlayer {
    pub fn decide(&self, busy: impl Fn(usize) -> bool) -> Action {
        match self.action {
            Action::Ris { ris, .. } if busy(ris) => Action::Direct { sf: self.direct_sf },
            a => a,
        }
    }
}

/// Policy names accepted in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicySpec {
    E2Boost,
    E2BoostNoTs,
    E2BoostFixedEps(f64),
    Got,
    QLearning,
    Random,
    Optimal,
}

impl PolicySpec {
    pub fn name(&self) -> String {
        match self {
            PolicySpec::E2Boost => "e2boost".into(),
            PolicySpec::E2BoostNoTs => "e2boost-no-ts".into(),
            PolicySpec::E2BoostFixedEps(v) => format!("e2boost-fixed-eps:{v}"),
            PolicySpec::Got => "got".into(),
            PolicySpec::QLearning => "qlearning".into(),
            PolicySpec::Random => "random".into(),
            PolicySpec::Optimal => "optimal".into(),
        }
    }

    /// Whether the policy follows the epoch schedule.
    pub fn is_epoch_based(&self) -> bool {
        matches!(
            self,
            PolicySpec::E2Boost | PolicySpec::E2BoostNoTs | PolicySpec::E2BoostFixedEps(_) | PolicySpec::Got
        )
    }
}

impl core::fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.name())
    }
}

impl core::str::FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        Ok(match s {
            "e2boost" => PolicySpec::E2Boost,
            "e2boost-no-ts" => PolicySpec::E2BoostNoTs,
            "got" => PolicySpec::Got,
            "qlearning" | "q-learning" => PolicySpec::QLearning,
            "random" => PolicySpec::Random,
            "optimal" => PolicySpec::Optimal,
            _ => {
                let value = s
                    .strip_prefix("e2boost-fixed-eps:")
                    .ok_or_else(|| Error::Invalid(format!("unknown policy '{s}'")))?;
                let eps: f64 = value
                    .parse()
                    .map_err(|_| Error::Invalid(format!("'{value}' is not a number in policy '{s}'")))?;
                if !(0.0..=1.0).contains(&eps) {
                    return Err(Error::Invalid(format!("exploration rate {eps} outside [0, 1]")));
                }
                PolicySpec::E2BoostFixedEps(eps)
            }
        })
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> String {
        p.name().to_string()
    }
}
