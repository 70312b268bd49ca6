//! Acceptance checks. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits non-zero when a criterion outside `KNOWN_DIVERGENT` fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use e2boost::cli::run_spec;
use e2boost::harness::{run_monte_carlo, ExperimentSpec, PolicyRun, WorldSource};
use e2boost::scenario::ScenarioFile;
use e2boost_core::baselines::{hungarian_assign, AssignmentMatrix, PolicySpec};
use e2boost_core::channel::{
    constant_phase_shifts, estimate_success_probs, monotonicity_violations, optimal_phase_shifts, RisLink,
};
use e2boost_core::netmodel::PhaseShiftMode;
use e2boost_core::sim::trial_rng;
use rand::Rng;

/// Criteria that are reported but do not fail the run. See the README.
const KNOWN_DIVERGENT: &[u32] = &[3];

const SEED: u64 = 7;

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn cache_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-oracles");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn spec(scenario: &str, policies: Vec<PolicySpec>, nu: (f64, f64, f64), reps: u64) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(scenario_path(scenario), policies, cache_dir());
    s.schedule.nu1 = nu.0;
    s.schedule.nu2 = nu.1;
    s.schedule.nu3 = nu.2;
    s.reps = reps;
    s.seed = SEED;
    s.points = 50;
    s
}

fn run(spec: &ExperimentSpec, policy: PolicySpec) -> Result<PolicyRun, String> {
    let source = WorldSource::prepare(spec, Some(&cache_dir())).map_err(|e| e.to_string())?;
    run_monte_carlo(spec, &source, policy).map_err(|e| e.to_string())
}

fn final_throughput(run: &PolicyRun) -> f64 {
    run.final_point().map_or(0.0, |p| p.mean_throughput)
}

fn regret_at(run: &PolicyRun, time: u64) -> Option<f64> {
    run.aggregate.iter().find(|p| p.time == time).map(|p| p.pseudo_regret)
}

type Outcome = Result<(bool, String), String>;

fn rates_table() -> Outcome {
    let s = ScenarioFile::load(&scenario_path("three-ris.scenario"))
        .map_err(|e| e.to_string())?
        .build()
        .map_err(|e| e.to_string())?;
    let mbps: Vec<f64> = s.sf_table.rates.iter().map(|r| (r / 1e4).round() / 100.0).collect();
    Ok((
        mbps == [1.09, 0.63, 0.35, 0.20, 0.11, 0.06],
        format!("rates {mbps:?} Mbps"),
    ))
}

fn fixed_convergence() -> Outcome {
    let s = spec(
        "three-ris.scenario",
        vec![PolicySpec::E2Boost],
        (1000.0, 1000.0, 100.0),
        100,
    );
    let r = run(&s, PolicySpec::E2Boost)?;
    let (thr, opt, conv) = (final_throughput(&r), r.mean_optimal_rate(), r.converged_fraction());
    let gap = 1.0 - thr / opt;
    Ok((
        conv >= 0.9 && gap <= 0.05,
        format!(
            "converged {:.0}% of {} trials, {:.3} vs optimal {:.3} Mbps (gap {:.1}%)",
            conv * 100.0,
            r.trials.len(),
            thr / 1e6,
            opt / 1e6,
            gap * 100.0
        ),
    ))
}

fn regret_checks() -> Result<(Outcome, Outcome), String> {
    let s = spec(
        "three-ris.scenario",
        vec![PolicySpec::E2Boost, PolicySpec::Got],
        (2000.0, 2000.0, 100.0),
        100,
    );
    let e2 = run(&s, PolicySpec::E2Boost)?;
    let got = run(&s, PolicySpec::Got)?;
    let ends = s.schedule.epoch_ends(s.epochs);
    let at = |z: usize| regret_at(&e2, ends[z - 1]).ok_or_else(|| format!("no point at epoch {z}"));
    let per_slot = |z: usize| at(z).map(|r| r / ends[z - 1] as f64);
    let (early, late) = (per_slot(3)?, per_slot(ends.len())?);
    let mut increments = Vec::new();
    for z in 1..=ends.len() {
        increments.push(at(z)? - if z == 1 { 0.0 } else { at(z - 1)? });
    }
    let tail = &increments[increments.len() - 4..];
    let shrinking = tail.windows(2).all(|w| w[1] <= w[0]);
    let ratio = late / early;
    let growth = (
        ratio < 0.25 && shrinking,
        format!(
            "R/T ratio {ratio:.3} (needs < 0.25); last epoch increments {:?} Mbps·slots (non-increasing: {shrinking})",
            tail.iter().map(|x| (x / 1e6).round()).collect::<Vec<_>>()
        ),
    );
    let (re, rg) = (
        e2.final_point().unwrap().pseudo_regret,
        got.final_point().unwrap().pseudo_regret,
    );
    let versus = (
        rg >= 2.0 * re,
        format!(
            "GoT regret {:.0} vs e2boost {:.0} Mbps·slots (ratio {:.2})",
            rg / 1e6,
            re / 1e6,
            rg / re
        ),
    );
    Ok((Ok(growth), Ok(versus)))
}

fn exhaustive(m: &AssignmentMatrix) -> f64 {
    fn go(p: usize, used: &mut [bool], m: &AssignmentMatrix) -> f64 {
        if p == m.n_players {
            return 0.0;
        }
        let s = m.n_sf;
        let direct = m.direct.as_ref().map_or(f64::NEG_INFINITY, |d| {
            d[p * s..(p + 1) * s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
        });
        let mut best = direct + go(p + 1, used, m);
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                let v = (0..s).map(|j| m.ris_value(p, k, j)).fold(f64::NEG_INFINITY, f64::max);
                best = best.max(v + go(p + 1, used, m));
                used[k] = false;
            }
        }
        best
    }
    go(0, &mut vec![false; m.n_ris], m)
}

fn hungarian_vs_exhaustive() -> Outcome {
    let mut rng = trial_rng(SEED, 0, 99);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (n, k, s) = (
            rng.random_range(1..=4),
            rng.random_range(1..=4),
            rng.random_range(1..=3),
        );
        let m = AssignmentMatrix {
            n_players: n,
            n_ris: k,
            n_sf: s,
            value: (0..n * k * s).map(|_| rng.random::<f64>() * 1.1e6).collect(),
            direct: Some((0..n * s).map(|_| rng.random::<f64>() * 2e5).collect()),
        };
        let h = hungarian_assign(&m).map_err(|e| e.to_string())?.total;
        worst = worst.max((h - exhaustive(&m)).abs());
    }
    Ok((worst <= 1e-6, format!("200 instances, largest difference {worst:.2e}")))
}

fn coherence() -> Outcome {
    let s = ScenarioFile::load(&scenario_path("three-ris.scenario"))
        .map_err(|e| e.to_string())?
        .build()
        .map_err(|e| e.to_string())?;
    let mut min_ratio = f64::INFINITY;
    let mut flat_below = true;
    for geom in &s.riss {
        for dev in &s.devices {
            let tuned = RisLink::new(
                geom,
                &optimal_phase_shifts(geom, &s.bs, dev, &s.radio),
                dev,
                &s.bs,
                &s.radio,
            );
            let flat = constant_phase_shifts(geom, 170, s.radio.pin_bits).map_err(|e| e.to_string())?;
            let flat = RisLink::new(geom, &flat, dev, &s.bs, &s.radio);
            min_ratio = min_ratio.min(tuned.los_combined / tuned.los_magnitude_sum);
            flat_below &= flat.los_combined < tuned.los_combined;
        }
    }
    Ok((
        min_ratio >= 0.99 && flat_below,
        format!("smallest coherence {min_ratio:.5}; constant phase weaker on every link: {flat_below}"),
    ))
}

fn monotone_rows() -> Outcome {
    let s = ScenarioFile::load(&scenario_path("three-ris.scenario"))
        .map_err(|e| e.to_string())?
        .build()
        .map_err(|e| e.to_string())?;
    let mut rng = trial_rng(SEED, 0, 98);
    let t = estimate_success_probs(&s, 100_000, &mut rng).map_err(|e| e.to_string())?;
    let rows = |v: &[f64]| v.chunks(t.n_sf).map(monotonicity_violations).sum::<usize>();
    let raw = rows(&t.raw_ris_assisted) + rows(&t.raw_direct);
    let repaired = rows(&t.ris_assisted) + rows(&t.direct);
    Ok((
        raw <= 1 && repaired == 0,
        format!("raw violations {raw}, after repair {repaired}"),
    ))
}

fn throughput_orderings() -> Outcome {
    let base = spec(
        "three-ris.scenario",
        vec![PolicySpec::E2Boost],
        (1000.0, 1000.0, 100.0),
        30,
    );
    let mut zetas = Vec::new();
    for z in [0.5, 1.0, 4.0, 10.0] {
        let mut s = base.clone();
        s.rician_factor = Some(z);
        zetas.push(final_throughput(&run(&s, PolicySpec::E2Boost)?));
    }
    let mut flat = base.clone();
    flat.phase_mode = Some(PhaseShiftMode::Constant { rho: 170 });
    let flat = final_throughput(&run(&flat, PolicySpec::E2Boost)?);
    let tuned = zetas[2];
    let rising = zetas.windows(2).all(|w| w[1] > w[0]);
    Ok((
        tuned > flat && rising,
        format!(
            "optimal {:.3} vs constant {:.4} Mbps; rician 0.5/1/4/10 -> {:?} Mbps",
            tuned / 1e6,
            flat / 1e6,
            zetas.iter().map(|x| (x / 1e3).round() / 1e3).collect::<Vec<_>>()
        ),
    ))
}

fn clustered() -> Outcome {
    let s = spec(
        "clustered-11.scenario",
        vec![PolicySpec::E2Boost, PolicySpec::Random],
        (1000.0, 1000.0, 100.0),
        10,
    );
    let e2 = run(&s, PolicySpec::E2Boost)?;
    let random = run(&s, PolicySpec::Random)?;
    let faults: u64 = e2.trials.iter().map(|t| t.rotation_faults).sum();
    let clustered = e2
        .trials
        .iter()
        .all(|t| t.clusters.as_ref().is_some_and(|c| c.len() == 11));
    let (a, b) = (final_throughput(&e2), final_throughput(&random));
    Ok((
        faults == 0 && clustered && a >= 1.5 * b,
        format!(
            "{} trials, rotation faults {faults}, e2boost {:.3} vs random {:.3} Mbps",
            e2.trials.len(),
            a / 1e6,
            b / 1e6
        ),
    ))
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    let _ = std::fs::remove_dir_all(&root);
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let mut s = spec(
            "three-ris.scenario",
            vec![
                PolicySpec::E2Boost,
                PolicySpec::Got,
                PolicySpec::QLearning,
                PolicySpec::Random,
            ],
            (200.0, 200.0, 20.0),
            8,
        );
        s.epochs = 4;
        s.trace = true;
        s.out = root.join(name);
        run_spec(&s, Some(&cache_dir())).map_err(|e| e.to_string())?;
        outputs.push(csv_files(&s.out));
    }
    let same = !outputs[0].is_empty() && outputs[0] == outputs[1];
    Ok((same, format!("{} CSV files compared byte for byte", outputs[0].len())))
}

fn main() -> ExitCode {
    let mut failures = Vec::new();
    let mut report = |id: u32, title: &str, outcome: Outcome, started: Instant| {
        let secs = started.elapsed().as_secs_f64();
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        let tag = if pass { "PASS" } else { "FAIL" };
        let note = if !pass && KNOWN_DIVERGENT.contains(&id) {
            " (known divergence)"
        } else {
            ""
        };
        println!("[{tag}] {id:>2} {title}: {detail}{note} [{secs:.1}s]");
        if !pass && !KNOWN_DIVERGENT.contains(&id) {
            failures.push(id);
        }
    };

    let t = Instant::now();
    report(1, "SF rate table", rates_table(), t);
    let t = Instant::now();
    report(2, "fixed-scenario convergence", fixed_convergence(), t);
    let t = Instant::now();
    let (growth, versus) = match regret_checks() {
        Ok(pair) => pair,
        Err(e) => (Err(e.clone()), Err(e)),
    };
    report(3, "sublinear regret growth", growth, t);
    report(4, "GoT regret at least twice e2boost", versus, t);
    let t = Instant::now();
    report(5, "Hungarian equals exhaustive search", hungarian_vs_exhaustive(), t);
    let t = Instant::now();
    report(6, "phase coherence", coherence(), t);
    let t = Instant::now();
    report(7, "monotone success rows", monotone_rows(), t);
    let t = Instant::now();
    report(8, "throughput orderings", throughput_orderings(), t);
    let t = Instant::now();
    report(9, "clustered rotation", clustered(), t);
    let t = Instant::now();
    report(10, "byte-identical CSVs", determinism(), t);

    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failures:?}");
        ExitCode::FAILURE
    }
}
