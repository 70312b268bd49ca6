//! Core models for distributed RIS and spreading-factor selection by IoT
//! devices.
//!
//! The crate is `no_std` with `alloc`. It contains:
//!
//! * [`netmodel`]: scenario geometry, radio constants and validation;
//! * [`channel`]: the RIS-assisted and direct propagation model and the
//!   Monte Carlo success-probability oracle;
//! * [`bandit`]: the epoch-structured learner (exploration, content and
//!   discontent game, Thompson sampling) and the clustered variant;
//! * [`baselines`]: Hungarian assignment, Q-learning, random and fixed
//!   reference policies;
//! * [`sim`]: the slotted environment, collision resolution and metrics.
//!
//! File formats, the command line and parallel experiment drivers live in
//! the companion `e2boost` crate.

#![no_std]
extern crate alloc;

pub mod bandit;
pub mod baselines;
pub mod channel;
pub mod netmodel;
pub mod sim;

use alloc::string::String;

/// Errors raised by the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate geometry")]
    DegenerateGeometry,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible assignment: {0}")]
    Infeasible(String),
    #[error("clustering needs more devices than RISs; use the plain learner ({0})")]
    TooFewDevices(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}
