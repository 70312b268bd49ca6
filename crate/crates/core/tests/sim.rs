mod common;

use e2boost_core::bandit::{Action, EpochSchedule, Feedback};
use e2boost_core::baselines::PolicySpec;
use e2boost_core::netmodel::Position3D;
use e2boost_core::sim::{
    compute_pseudo_regret, mean_stderr, resolve_slot, run_trial, trial_rng, MetricsLedger, OccupancyProcess, Player,
    PlayerOutcome, SlotOutcome, TrialConfig,
};

fn positions(n: usize) -> Vec<Position3D> {
    (0..n)
        .map(|i| Position3D::new(150.0 + 7.0 * i as f64, 150.0 + 3.0 * (i % 3) as f64, 1.5))
        .collect()
}

/// Two devices, two RISs, two SFs; all probabilities are dyadic so every
/// reward sum is exact.
fn dyadic_world() -> (e2boost_core::sim::Environment, e2boost_core::baselines::OptimalProfile) {
    let t = common::table(
        2,
        2,
        2,
        vec![0.5, 0.75, 0.25, 0.5, 0.75, 1.0, 0.5, 0.5],
        vec![0.125, 0.25, 0.0, 0.25],
    );
    common::world(t, vec![4.0, 2.0], vec![0.25, 0.5])
}

fn small_schedule() -> EpochSchedule {
    EpochSchedule::new(200.0, 200.0, 20.0, 0.0)
}

#[test]
fn slot_resolution_rules() {
    let t = common::table(3, 2, 2, vec![1.0; 12], vec![1.0; 6]);
    let (env, _) = common::world(t, vec![4.0, 2.0], vec![0.0, 0.0]);
    let mut rng = common::rng(1);
    let mut out = SlotOutcome::default();

    let actions = [
        Action::Ris { ris: 0, sf: 0 },
        Action::Ris { ris: 0, sf: 1 },
        Action::Ris { ris: 1, sf: 1 },
    ];
    resolve_slot(&env, &actions, &[false, false], &mut rng, &mut out);
    let fb: Vec<Feedback> = out.players.iter().map(|p| p.feedback).collect();
    assert_eq!(fb, vec![Feedback::Collision, Feedback::Collision, Feedback::Success]);
    assert_eq!(out.players[2].reward, 2.0);
    assert_eq!(out.players[0].reward, 0.0);
    assert_eq!(out.players[0].expected, 0.0);

    // A busy RIS blocks its user and leaves no one to collide with.
    resolve_slot(&env, &actions, &[true, false], &mut rng, &mut out);
    assert!(out.players[..2]
        .iter()
        .all(|p| p.feedback == Feedback::Busy && !p.delivered()));

    // The direct link is shared without collisions.
    let direct = [Action::Direct { sf: 0 }; 3];
    resolve_slot(&env, &direct, &[true, true], &mut rng, &mut out);
    assert!(out
        .players
        .iter()
        .all(|p| p.feedback == Feedback::Success && p.reward == 4.0));
}

#[test]
fn zero_probability_never_succeeds() {
    let t = common::table(1, 1, 1, vec![0.0], vec![0.0]);
    let (env, _) = common::world(t, vec![1.0], vec![0.0]);
    let mut rng = common::rng(2);
    let mut out = SlotOutcome::default();
    for _ in 0..100 {
        resolve_slot(&env, &[Action::Ris { ris: 0, sf: 0 }], &[false], &mut rng, &mut out);
        assert_eq!(out.players[0].feedback, Feedback::Failure);
    }
}

#[test]
fn occupancy_frequency() {
    let occ = OccupancyProcess {
        active_prob: vec![0.2, 0.0, 1.0],
    };
    let mut rng = common::rng(3);
    let mut busy = [false; 3];
    let mut hits = [0u64; 3];
    let n = 100_000u64;
    for _ in 0..n {
        occ.sample(&mut rng, &mut busy);
        for (h, &b) in hits.iter_mut().zip(&busy) {
            *h += u64::from(b);
        }
    }
    let sd = (0.2f64 * 0.8 / n as f64).sqrt();
    assert!((hits[0] as f64 / n as f64 - 0.2).abs() < 4.0 * sd);
    assert_eq!((hits[1], hits[2]), (0, n));
}

#[test]
fn regret_of_ten_suboptimal_pulls() {
    // Optimal arm mean 1, chosen arm mean 0.5, ten pulls.
    let t = common::table(1, 1, 1, vec![1.0], vec![0.5]);
    let (env, profile) = common::world(t, vec![1.0], vec![0.0]);
    let mut ledger = MetricsLedger::new(1, 1, 1, 0);
    let outcome = SlotOutcome {
        players: vec![PlayerOutcome {
            action: Action::Direct { sf: 0 },
            feedback: Feedback::Success,
            reward: 1.0,
            expected: 0.5,
        }],
    };
    for _ in 0..10 {
        ledger.record(&outcome, &[false], &profile);
    }
    assert_eq!(ledger.pseudo_regret, 5.0);
    assert_eq!(compute_pseudo_regret(&ledger, &env, &profile), 5.0);
    assert_eq!(ledger.regret, 0.0);
    assert_eq!(ledger.mean_sum_throughput(), 0.5);
}

#[test]
fn pseudo_regret_matches_pull_counts() {
    let (env, profile) = dyadic_world();
    for policy in [
        PolicySpec::Random,
        PolicySpec::E2Boost,
        PolicySpec::Got,
        PolicySpec::QLearning,
    ] {
        let cfg = TrialConfig::new(policy, small_schedule(), 3, 11);
        let out = run_trial(&cfg, &env, &profile, &positions(2)).unwrap();
        let from_counts = compute_pseudo_regret(&out.ledger, &env, &profile);
        assert_eq!(out.ledger.pseudo_regret, from_counts, "{policy}");
    }
}

#[test]
fn optimal_policy_has_no_pseudo_regret() {
    let (env, profile) = dyadic_world();
    let cfg = TrialConfig::new(PolicySpec::Optimal, small_schedule(), 4, 5);
    let out = run_trial(&cfg, &env, &profile, &positions(2)).unwrap();
    assert_eq!(out.ledger.pseudo_regret, 0.0);
    assert!(out.ledger.collisions.iter().all(|&c| c == 0));
}

#[test]
fn random_policy_throughput_matches_expectation() {
    let (env, profile) = dyadic_world();
    let (n, k, m) = (2, 2, 2);
    let mut expect = 0.0;
    for p in 0..n {
        for r in 0..k {
            for s in 0..m {
                let free = (1.0 - env.active_prob[r]) * (1.0 - 1.0 / k as f64).powi(n as i32 - 1);
                let ris = env.rates[s] * env.table.ris(p, r, s);
                let direct = env.rates[s] * env.table.direct(p, s);
                expect += (free * ris + env.active_prob[r] * direct) / (k * m) as f64;
            }
        }
    }
    let samples: Vec<f64> = (0..40)
        .map(|trial| {
            let mut cfg = TrialConfig::new(PolicySpec::Random, small_schedule(), 1, 9);
            cfg.trial = trial;
            cfg.horizon = Some(5_000);
            run_trial(&cfg, &env, &profile, &positions(2))
                .unwrap()
                .ledger
                .mean_sum_throughput()
        })
        .collect();
    let (mean, se) = mean_stderr(&samples);
    assert!((mean - expect).abs() < 4.0 * se + 1e-9, "{mean} vs {expect} (se {se})");
}

#[test]
fn trials_are_reproducible() {
    let (env, profile) = dyadic_world();
    let mut cfg = TrialConfig::new(PolicySpec::E2Boost, small_schedule(), 3, 42);
    cfg.record_trace = true;
    cfg.checkpoints = vec![100, 500, 1000];
    let a = run_trial(&cfg, &env, &profile, &positions(2)).unwrap();
    let b = run_trial(&cfg, &env, &profile, &positions(2)).unwrap();
    assert_eq!(a.ledger, b.ledger);
    assert_eq!(a.trace, b.trace);
    assert_eq!(
        a.ledger.checkpoints.iter().map(|c| c.slot).collect::<Vec<_>>(),
        vec![100, 500, 1000]
    );
    cfg.trial = 1;
    let c = run_trial(&cfg, &env, &profile, &positions(2)).unwrap();
    assert_ne!(a.trace, c.trace);
}

#[test]
fn trial_streams_are_independent() {
    use rand::Rng;
    let mut a = trial_rng(1, 0, 0);
    let mut b = trial_rng(1, 0, 1);
    let mut c = trial_rng(1, 1, 0);
    let x: u64 = a.random();
    assert_ne!(x, b.random::<u64>());
    assert_ne!(x, c.random::<u64>());
    assert_eq!(x, trial_rng(1, 0, 0).random::<u64>());
}

#[test]
fn empty_horizon() {
    let (env, profile) = dyadic_world();
    let mut cfg = TrialConfig::new(PolicySpec::E2Boost, small_schedule(), 0, 1);
    cfg.checkpoints = vec![1, 10];
    let out = run_trial(&cfg, &env, &profile, &positions(2)).unwrap();
    assert_eq!(out.ledger.slots, 0);
    assert_eq!(out.ledger.pseudo_regret, 0.0);
    assert!(out.ledger.checkpoints.is_empty());
    assert_eq!(out.ledger.mean_sum_throughput(), 0.0);
}

#[test]
fn ledger_bookkeeping() {
    let (env, profile) = dyadic_world();
    let cfg = TrialConfig::new(PolicySpec::QLearning, small_schedule(), 3, 3);
    let out = run_trial(&cfg, &env, &profile, &positions(2)).unwrap();
    let l = &out.ledger;
    for n in 0..2 {
        let pulls: u64 = (0..2)
            .flat_map(|s| (0..l.outcome_arms()).map(move |i| (s, i)))
            .map(|(s, i)| l.pull_count(n, s, i))
            .sum();
        assert_eq!(pulls, l.slots);
        assert_eq!(l.selection_row(n).iter().sum::<u64>(), l.slots);
        assert!(l.cumulative_reward[n] <= l.slots as f64 * env.rates[0]);
        assert!(l.cumulative_expected[n] <= l.slots as f64 * env.rates[0]);
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let (env, profile) = dyadic_world();
    let cfg = TrialConfig::new(PolicySpec::Random, small_schedule(), 1, 1);
    assert!(run_trial(&cfg, &env, &profile, &positions(3)).is_err());
}

#[test]
fn players_round_trip_through_json() {
    let (env, profile) = dyadic_world();
    for policy in [
        PolicySpec::E2Boost,
        PolicySpec::QLearning,
        PolicySpec::Random,
        PolicySpec::Optimal,
    ] {
        let cfg = TrialConfig::new(policy, small_schedule(), 2, 4);
        let out = run_trial(&cfg, &env, &profile, &positions(2)).unwrap();
        let json = serde_json::to_string(&out.players).unwrap();
        let back: Vec<Player> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, out.players, "{policy}");
    }
}

#[test]
fn single_sf_makes_got_and_full_exploration_agree() {
    let t = common::table(2, 2, 1, vec![0.5, 0.75, 0.75, 0.25], vec![0.125, 0.25]);
    let (env, profile) = common::world(t, vec![1.0], vec![0.25, 0.25]);
    let run = |policy| {
        let mut cfg = TrialConfig::new(policy, small_schedule(), 3, 8);
        cfg.record_trace = true;
        run_trial(&cfg, &env, &profile, &positions(2)).unwrap()
    };
    let got = run(PolicySpec::Got);
    let fixed = run(PolicySpec::E2BoostFixedEps(1.0));
    assert_eq!(got.trace, fixed.trace);
    assert_eq!(got.ledger, fixed.ledger);
}

#[test]
fn clustered_devices_rotate_without_faults() {
    let t = common::table(5, 2, 2, vec![0.5; 20], vec![0.25; 10]);
    let (env, profile) = common::world(t, vec![2.0, 1.0], vec![0.2, 0.2]);
    let cfg = TrialConfig::new(PolicySpec::E2Boost, small_schedule(), 2, 6);
    let out = run_trial(&cfg, &env, &profile, &positions(5)).unwrap();
    assert_eq!(out.rotation_faults, 0);
    let clusters = out.clusters.expect("more devices than RISs");
    assert_eq!(clusters.members.iter().map(Vec::len).sum::<usize>(), 5);
    let random = run_trial(
        &TrialConfig::new(PolicySpec::Random, small_schedule(), 2, 6),
        &env,
        &profile,
        &positions(5),
    )
    .unwrap();
    assert!(random.clusters.is_none());
}
