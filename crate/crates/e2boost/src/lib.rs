//! File formats, oracle caching, the Monte Carlo harness and the command
//! line front end of the e2boost simulator.

pub mod cli;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod output;
pub mod scenario;

pub use error::AppError;
