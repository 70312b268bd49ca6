#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Epoch length law: two polynomially growing phases followed by an
/// exploitation phase that doubles every epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochSchedule {
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub delta: f64,
}

impl Default for EpochSchedule {
    fn default() -> Self {
        Self {
            nu1: 1000.0,
            nu2: 1000.0,
            nu3: 100.0,
            delta: 0.0,
        }
    }
}

impl EpochSchedule {
    pub fn new(nu1: f64, nu2: f64, nu3: f64, delta: f64) -> Self {
        Self { nu1, nu2, nu3, delta }
    }

    pub fn is_valid(&self) -> bool {
        self.nu1 > 0.0 && self.nu2 > 0.0 && self.nu3 > 0.0 && self.delta >= 0.0 && self.delta.is_finite()
    }

    fn grow(nu: f64, epoch: u32, delta: f64) -> u64 {
        ((nu * (epoch as f64).powf(delta)).ceil() as u64).max(1)
    }

    pub fn explore_len(&self, epoch: u32) -> u64 {
        Self::grow(self.nu1, epoch, self.delta)
    }

    pub fn game_len(&self, epoch: u32) -> u64 {
        Self::grow(self.nu2, epoch, self.delta)
    }

    pub fn exploit_len(&self, epoch: u32) -> u64 {
        ((self.nu3 * 2f64.powi(epoch as i32)).ceil() as u64).max(1)
    }

    pub fn epoch_len(&self, epoch: u32) -> u64 {
        self.explore_len(epoch) + self.game_len(epoch) + self.exploit_len(epoch)
    }

    /// Slots needed to finish epochs `1..=epochs`.
    pub fn total_slots(&self, epochs: u32) -> u64 {
        (1..=epochs).map(|z| self.epoch_len(z)).sum()
    }

    /// Slot index (zero-based, exclusive) at which each epoch ends.
    pub fn epoch_ends(&self, epochs: u32) -> alloc::vec::Vec<u64> {
        let mut acc = 0;
        (1..=epochs)
            .map(|z| {
                acc += self.epoch_len(z);
                acc
            })
            .collect()
    }
}
