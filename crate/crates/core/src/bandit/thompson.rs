//! Beta-Bernoulli Thompson sampling over spreading factors.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::{argmax, Feedback};

/// Success and failure counts per spreading factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetaPosterior {
    pub alpha: Vec<u64>,
    pub beta: Vec<u64>,
}

impl BetaPosterior {
    pub fn new(n_sf: usize) -> Self {
        Self {
            alpha: vec![0; n_sf],
            beta: vec![0; n_sf],
        }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Posterior-mean style estimate `α/(α+β)`, zero when unobserved.
    pub fn estimate(&self, m: usize) -> f64 {
        let n = self.alpha[m] + self.beta[m];
        if n == 0 {
            0.0
        } else {
            self.alpha[m] as f64 / n as f64
        }
    }

    pub fn observations(&self, m: usize) -> u64 {
        self.alpha[m] + self.beta[m]
    }
}

/// Draws one sample per SF from `Beta(α+1, β+1)` and returns the SF with the
/// largest sampled rate-weighted success. A single SF is returned without
/// touching the RNG.
pub fn ts_select<R: Rng + ?Sized>(post: &BetaPosterior, rates: &[f64], rng: &mut R) -> usize {
    debug_assert_eq!(post.len(), rates.len());
    if rates.len() == 1 {
        return 0;
    }
    let draws = post.alpha.iter().zip(&post.beta).zip(rates).map(|((&a, &b), &c)| {
        let dist = Beta::new(a as f64 + 1.0, b as f64 + 1.0).expect("shape parameters are at least 1");
        c * dist.sample(rng)
    });
    argmax(draws).unwrap_or(0)
}

/// Counts an acknowledged transmission; no-feedback outcomes are ignored.
pub fn ts_update(post: &mut BetaPosterior, sf: usize, feedback: Feedback) {
    match feedback {
        Feedback::Success => post.alpha[sf] += 1,
        Feedback::Failure => post.beta[sf] += 1,
        Feedback::Collision | Feedback::Busy => {}
    }
}

/// SF maximizing `c_m · α_m/(α_m+β_m)`.
pub fn best_sf(post: &BetaPosterior, rates: &[f64]) -> usize {
    argmax(rates.iter().enumerate().map(|(m, &c)| c * post.estimate(m))).unwrap_or(0)
}
