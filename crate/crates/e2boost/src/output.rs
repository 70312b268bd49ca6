//! Result files.
//!
//! Throughput columns are in Mbps and regret columns in Mbps times slots.
//! Floats are printed with Rust's shortest round-trip formatting, so equal
//! runs give byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use e2boost_core::bandit::{Action, Feedback};
use e2boost_core::sim::TraceRow;
use serde::{Deserialize, Serialize};

use crate::error::AppError;
use crate::harness::{AggregatePoint, ExperimentSpec, PolicyRun};

pub const SCHEMA_VERSION: u32 = 1;
const MBPS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub time: u64,
    pub mean_throughput: f64,
    pub stderr: f64,
    pub pseudo_regret: f64,
    pub pseudo_regret_stderr: f64,
    pub mean_realized_throughput: f64,
}

impl From<&AggregatePoint> for AggregateRow {
    fn from(p: &AggregatePoint) -> Self {
        Self {
            time: p.time,
            mean_throughput: p.mean_throughput / MBPS,
            stderr: p.stderr / MBPS,
            pseudo_regret: p.pseudo_regret / MBPS,
            pseudo_regret_stderr: p.pseudo_regret_stderr / MBPS,
            mean_realized_throughput: p.realized_throughput / MBPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub slot: u64,
    pub player: usize,
    /// 1 for an RIS-assisted link, 2 for the direct link.
    pub pattern: u8,
    /// Empty for the direct link.
    pub ris: Option<usize>,
    pub sf: usize,
    /// 0 when the transmission was lost to a collision or a busy RIS.
    pub collision: u8,
    /// Acknowledgement bit; empty when no feedback arrived.
    pub feedback: Option<u8>,
    pub reward: f64,
}

impl From<&TraceRow> for TraceRecord {
    fn from(r: &TraceRow) -> Self {
        let (pattern, ris) = match r.action {
            Action::Ris { ris, .. } => (1, Some(ris)),
            Action::Direct { .. } => (2, None),
        };
        let (collision, feedback) = match r.feedback {
            Feedback::Success => (1, Some(1)),
            Feedback::Failure => (1, Some(0)),
            Feedback::Collision | Feedback::Busy => (0, None),
        };
        Self {
            slot: r.slot,
            player: r.player,
            pattern,
            ris,
            sf: r.action.sf(),
            collision,
            feedback,
            reward: r.reward / MBPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub policy: String,
    pub time: u64,
    pub mean_throughput: f64,
    pub pseudo_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub trials: u64,
    pub final_mean_throughput_mbps: f64,
    pub final_throughput_stderr_mbps: f64,
    pub final_pseudo_regret: f64,
    pub final_pseudo_regret_stderr: f64,
    pub final_regret: f64,
    /// Share of trials where the devices ended on distinct RISs at the fastest SF.
    pub converged_fraction: f64,
    pub mean_collisions: f64,
    pub rotation_faults: u64,
    /// Per device: mean selection count of each arm over the whole run.
    /// Arms are listed RIS-major (`ris * n_sf + sf`) then direct SFs.
    pub mean_histograms: Vec<Vec<f64>>,
    /// Per device and action label: how many trials ended with that mode.
    pub final_epoch_modes: Vec<BTreeMap<String, u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub config: ExperimentSpec,
    pub scenario_hash: Option<String>,
    pub horizon: u64,
    pub optimal_throughput_mbps: f64,
    pub policies: Vec<PolicySummary>,
}

pub fn action_label(a: Action) -> String {
    match a {
        Action::Ris { ris, sf } => format!("ris{ris}-sf{sf}"),
        Action::Direct { sf } => format!("direct-sf{sf}"),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> AppError {
    AppError::runtime(format!("{}: {e}", path.display()))
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), AppError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_aggregate_csv(path: &Path, points: &[AggregatePoint]) -> Result<(), AppError> {
    write_rows(path, points.iter().map(AggregateRow::from))
}

pub fn read_aggregate_csv(path: &Path) -> Result<Vec<AggregateRow>, AppError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<AggregateRow>, _>>()
        .map_err(|e| io_err(path, e))
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<(), AppError> {
    write_rows(path, rows.iter().map(TraceRecord::from))
}

pub fn summarize_policy(run: &PolicyRun) -> PolicySummary {
    let last = run.final_point().copied().unwrap_or(AggregatePoint {
        time: 0,
        mean_throughput: 0.0,
        stderr: 0.0,
        pseudo_regret: 0.0,
        pseudo_regret_stderr: 0.0,
        realized_throughput: 0.0,
    });
    let trials = run.trials.len().max(1) as f64;
    let n_devices = run.trials.first().map_or(0, |t| t.selections.len());
    let mut mean_histograms: Vec<Vec<f64>> = (0..n_devices)
        .map(|n| vec![0.0; run.trials[0].selections[n].len()])
        .collect();
    let mut final_epoch_modes = vec![BTreeMap::new(); n_devices];
    for t in &run.trials {
        for (n, row) in t.selections.iter().enumerate() {
            for (acc, &c) in mean_histograms[n].iter_mut().zip(row) {
                *acc += c as f64 / trials;
            }
            *final_epoch_modes[n]
                .entry(action_label(t.final_epoch_modes[n]))
                .or_insert(0) += 1;
        }
    }
    PolicySummary {
        policy: run.policy.to_string(),
        trials: run.trials.len() as u64,
        final_mean_throughput_mbps: last.mean_throughput / MBPS,
        final_throughput_stderr_mbps: last.stderr / MBPS,
        final_pseudo_regret: last.pseudo_regret / MBPS,
        final_pseudo_regret_stderr: last.pseudo_regret_stderr / MBPS,
        final_regret: run.trials.iter().map(|t| t.regret).sum::<f64>() / trials / MBPS,
        converged_fraction: run.converged_fraction(),
        mean_collisions: run.trials.iter().map(|t| t.collisions as f64).sum::<f64>() / trials,
        rotation_faults: run.trials.iter().map(|t| t.rotation_faults).sum(),
        mean_histograms,
        final_epoch_modes,
    }
}

pub fn aggregate_file_name(run: &PolicyRun) -> String {
    format!("{}.csv", file_stem(&run.policy.to_string()))
}

pub fn trace_file_name(run: &PolicyRun) -> String {
    format!("{}.trace.csv", file_stem(&run.policy.to_string()))
}

fn file_stem(name: &str) -> String {
    name.replace(':', "_")
}

/// Writes one aggregate CSV per policy, optional traces and `summary.json`
/// into `dir`. Returns the written paths.
pub fn write_run(
    dir: &Path,
    spec: &ExperimentSpec,
    scenario_hash: Option<String>,
    runs: &[PolicyRun],
) -> Result<Vec<PathBuf>, AppError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for run in runs {
        let path = dir.join(aggregate_file_name(run));
        write_aggregate_csv(&path, &run.aggregate)?;
        written.push(path);
        if spec.trace {
            let path = dir.join(trace_file_name(run));
            write_trace_csv(&path, &run.trace)?;
            written.push(path);
        }
    }
    let optimal = runs.first().map_or(0.0, PolicyRun::mean_optimal_rate) / MBPS;
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        config: spec.clone(),
        scenario_hash,
        horizon: spec.horizon(),
        optimal_throughput_mbps: optimal,
        policies: runs.iter().map(summarize_policy).collect(),
    };
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary)?;
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    written.push(path);
    Ok(written)
}

/// Merges aggregate CSVs into one long table labelled by file stem. All
/// inputs must share the same time column.
pub fn compare(inputs: &[PathBuf]) -> Result<Vec<CompareRow>, AppError> {
    let mut rows = Vec::new();
    let mut reference: Option<(PathBuf, Vec<u64>)> = None;
    for path in inputs {
        let data = read_aggregate_csv(path)?;
        let times: Vec<u64> = data.iter().map(|r| r.time).collect();
        match &reference {
            None => reference = Some((path.clone(), times)),
            Some((first, t)) if *t != times => {
                return Err(AppError::config(format!(
                    "{} and {} have different time points (horizons {} and {})",
                    first.display(),
                    path.display(),
                    t.last().copied().unwrap_or(0),
                    times.last().copied().unwrap_or(0)
                )));
            }
            Some(_) => {}
        }
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        rows.extend(data.into_iter().map(|r| CompareRow {
            policy: label.clone(),
            time: r.time,
            mean_throughput: r.mean_throughput,
            pseudo_regret: r.pseudo_regret,
        }));
    }
    Ok(rows)
}

pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> Result<(), AppError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    write_rows(path, rows)
}
