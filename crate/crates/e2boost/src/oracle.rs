//! Success-probability oracle cache.
//!
//! Cache files are JSON documents keyed by a SHA-256 digest of the scenario
//! together with the trial count and seed used for the estimate.

use std::fs;
use std::path::{Path, PathBuf};

use e2boost_core::channel::{estimate_success_probs, SuccessProbTable};
use e2boost_core::netmodel::Scenario;
use e2boost_core::sim::trial_rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::AppError;

pub const CACHE_FORMAT_VERSION: u32 = 1;

/// Stream reserved for oracle estimation, far from per-trial streams.
pub const ORACLE_STREAM: u64 = 0xFF_FF00;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCache {
    pub format_version: u32,
    pub scenario_hash: String,
    pub trials: u64,
    pub seed: u64,
    pub table: SuccessProbTable,
}

/// Hex SHA-256 of the scenario's canonical JSON form.
pub fn scenario_hash(s: &Scenario) -> String {
    let bytes = serde_json::to_vec(s).expect("scenario serializes");
    let mut hasher = Sha256::new();
    hasher.update(CACHE_FORMAT_VERSION.to_le_bytes());
    hasher.update(&bytes);
    hex::encode(hasher.finalize())
}

/// Estimates the oracle table with a deterministic stream of `seed`.
pub fn estimate(s: &Scenario, trials: u64, seed: u64) -> Result<SuccessProbTable, AppError> {
    let mut rng = trial_rng(seed, 0, ORACLE_STREAM);
    Ok(estimate_success_probs(s, trials, &mut rng)?)
}

pub fn cache_file_name(hash: &str, trials: u64, seed: u64) -> String {
    format!("oracle-{}-{trials}-{seed}.json", &hash[..16])
}

impl OracleCache {
    pub fn build(s: &Scenario, trials: u64, seed: u64) -> Result<Self, AppError> {
        Ok(Self {
            format_version: CACHE_FORMAT_VERSION,
            scenario_hash: scenario_hash(s),
            trials,
            seed,
            table: estimate(s, trials, seed)?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), AppError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| AppError::runtime(format!("cannot create {}: {e}", dir.display())))?;
        }
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| AppError::runtime(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, AppError> {
        let text =
            fs::read_to_string(path).map_err(|e| AppError::runtime(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn matches(&self, hash: &str, trials: u64, seed: u64) -> bool {
        self.format_version == CACHE_FORMAT_VERSION
            && self.scenario_hash == hash
            && self.trials == trials
            && self.seed == seed
    }
}

/// Returns the cached table for the scenario, computing and storing it in
/// `cache_dir` when no matching file exists.
pub fn load_or_build(
    s: &Scenario,
    trials: u64,
    seed: u64,
    cache_dir: Option<&Path>,
) -> Result<SuccessProbTable, AppError> {
    let hash = scenario_hash(s);
    let path: Option<PathBuf> = cache_dir.map(|d| d.join(cache_file_name(&hash, trials, seed)));
    if let Some(p) = path.as_ref().filter(|p| p.exists()) {
        if let Ok(cache) = OracleCache::read(p) {
            if cache.matches(&hash, trials, seed) {
                return Ok(cache.table);
            }
        }
    }
    let cache = OracleCache {
        format_version: CACHE_FORMAT_VERSION,
        scenario_hash: hash,
        trials,
        seed,
        table: estimate(s, trials, seed)?,
    };
    if let Some(p) = path {
        cache.write(&p)?;
    }
    Ok(cache.table)
}
