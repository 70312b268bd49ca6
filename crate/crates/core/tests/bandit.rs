mod common;

use e2boost_core::bandit::{
    adapt_epsilon, argmax, best_ris, best_sf, cluster_round_robin, game_step, game_transition, kmeans, pmf,
    record_content_play, ts_select, ts_update, uniform_index, wasserstein1, Action, BetaPosterior, ClusterSchedule,
    EpochSchedule, FHistory, Feedback, GameState, Learner, LearnerConfig, Mood, Phase,
};
use e2boost_core::netmodel::{sample_device_positions, Disc, Position3D};
use e2boost_core::Error;
use proptest::prelude::*;
use rand::Rng;

/// Pearson statistic of observed counts against expected probabilities.
fn chi_square(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

fn within_binomial(hits: u64, n: u64, p: f64, sigmas: f64) -> bool {
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    (hits as f64 / n as f64 - p).abs() <= sigmas * sd
}

#[test]
fn argmax_prefers_lowest_index() {
    assert_eq!(argmax([1.0, 3.0, 3.0, 2.0]), Some(1));
    assert_eq!(argmax(Vec::<f64>::new()), None);
    assert_eq!(argmax([f64::NAN, 1.0]), Some(1));
    assert_eq!(argmax([2.0, f64::NAN]), Some(0));
}

#[test]
fn uniform_index_single_choice_draws_nothing() {
    let mut a = common::rng(1);
    let mut b = common::rng(1);
    assert_eq!(uniform_index(1, &mut a), 0);
    assert_eq!(a.random::<u64>(), b.random::<u64>());
}

#[test]
fn schedule_lengths() {
    let s = EpochSchedule::default();
    assert_eq!(s.epoch_len(1), 2200);
    assert_eq!(s.exploit_len(10), 102_400);
    assert_eq!(s.total_slots(10), 224_600);
    assert_eq!(s.total_slots(0), 0);
    let ends = s.epoch_ends(3);
    assert_eq!(ends, vec![2200, 4600, 7400]);
    let grow = EpochSchedule::new(1000.0, 500.0, 100.0, 1.0);
    assert_eq!(grow.explore_len(3), 3000);
    assert_eq!(grow.game_len(2), 1000);
    assert_eq!(EpochSchedule::new(2000.0, 2000.0, 100.0, 0.0).total_slots(10), 244_600);
    assert!(!EpochSchedule::new(0.0, 1.0, 1.0, 0.0).is_valid());
}

#[test]
fn wasserstein_examples() {
    assert_eq!(wasserstein1(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]), 2.0);
    assert_eq!(wasserstein1(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
    assert!((wasserstein1(&[0.75, 0.25], &[0.5, 0.5]) - 0.25).abs() < 1e-15);
    assert_eq!(pmf(&[0, 0]), None);
    assert_eq!(pmf(&[1, 3]), Some(vec![0.25, 0.75]));
    assert_eq!(adapt_epsilon(&[5, 0, 0], &[0, 0, 5]), 1.0);
    assert!((adapt_epsilon(&[3, 1], &[1, 1]) - 0.25).abs() < 1e-15);
    assert_eq!(adapt_epsilon(&[0, 0], &[1, 1]), 1.0);
    assert_eq!(adapt_epsilon(&[4, 4], &[1, 1]), 0.0);
}

fn distribution(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, len).prop_filter_map("non-zero mass", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
    })
}

proptest! {
    #[test]
    fn wasserstein_is_a_metric(p in distribution(5), q in distribution(5), r in distribution(5)) {
        let pq = wasserstein1(&p, &q);
        prop_assert!(pq >= 0.0);
        prop_assert!((pq - wasserstein1(&q, &p)).abs() < 1e-12);
        prop_assert!(wasserstein1(&p, &p).abs() < 1e-12);
        prop_assert!(pq <= wasserstein1(&p, &r) + wasserstein1(&r, &q) + 1e-12);
        prop_assert!(pq <= 4.0 + 1e-12);
    }
}

#[test]
fn thompson_choice_frequencies() {
    // Arm 0 has no data (uniform draw); arm 1 saw one success (density 2x).
    let mut post = BetaPosterior::new(2);
    ts_update(&mut post, 1, Feedback::Success);
    let mut rng = common::rng(21);
    let n = 60_000;
    for (rates, p0) in [([1.0, 1.0], 1.0 / 3.0), ([2.0, 1.0], 2.0 / 3.0)] {
        let hits = (0..n).filter(|_| ts_select(&post, &rates, &mut rng) == 0).count() as u64;
        assert!(within_binomial(hits, n, p0, 4.0), "rates {rates:?}: {hits}/{n}");
    }
}

#[test]
fn thompson_updates_and_estimates() {
    let mut post = BetaPosterior::new(3);
    for fb in [
        Feedback::Success,
        Feedback::Success,
        Feedback::Failure,
        Feedback::Collision,
        Feedback::Busy,
    ] {
        ts_update(&mut post, 1, fb);
    }
    assert_eq!((post.alpha[1], post.beta[1]), (2, 1));
    assert_eq!(post.observations(1), 3);
    assert_eq!(post.estimate(0), 0.0);
    assert!((post.estimate(1) - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(best_sf(&post, &[3.0, 2.0, 1.0]), 1);
    let single = BetaPosterior::new(1);
    let mut a = common::rng(4);
    let mut b = common::rng(4);
    assert_eq!(ts_select(&single, &[1.0], &mut a), 0);
    assert_eq!(a.random::<u64>(), b.random::<u64>());
}

#[test]
fn content_player_deviation_frequencies() {
    let mut state = GameState::new(0.1, 1.0);
    state.baseline = 2;
    let mut rng = common::rng(31);
    let mut counts = [0u64; 4];
    for _ in 0..100_000 {
        counts[game_step(&state, 4, &mut rng)] += 1;
    }
    let other = 0.1 / 3.0;
    // 99.9% quantile of chi-square with 3 degrees of freedom.
    assert!(chi_square(&counts, &[other, other, 0.9, other]) < 16.27, "{counts:?}");

    state.mood = Mood::Discontent;
    let mut counts = [0u64; 4];
    for _ in 0..100_000 {
        counts[game_step(&state, 4, &mut rng)] += 1;
    }
    assert!(chi_square(&counts, &[0.25; 4]) < 16.27, "{counts:?}");
}

#[test]
fn mood_transition_probabilities() {
    let mut rng = common::rng(41);
    let n = 50_000;
    let mut content = 0;
    for _ in 0..n {
        let mut s = GameState::new(0.01, 1.4);
        s.u_max = 1.0;
        s.baseline = 0;
        game_transition(&mut s, 1, 0.5, &mut rng);
        assert_eq!(s.baseline, 1);
        content += u64::from(s.mood == Mood::Content);
    }
    // (u / u_max) · ε^(u_max - u) = 0.5 · 0.1.
    assert!(within_binomial(content, n, 0.05, 4.0), "{content}");

    let mut s = GameState::new(0.01, 1.4);
    s.u_max = 1.0;
    s.baseline = 3;
    let mut a = common::rng(2);
    let mut b = common::rng(2);
    game_transition(&mut s, 3, 0.7, &mut a);
    assert_eq!((s.mood, s.baseline), (Mood::Content, 3));
    assert_eq!(a.random::<u64>(), b.random::<u64>());

    game_transition(&mut s, 2, 0.0, &mut a);
    assert_eq!((s.mood, s.baseline), (Mood::Discontent, 2));
}

#[test]
fn history_window_and_pruning() {
    let mut h = FHistory::new(3);
    for z in 1..=6u32 {
        h.begin_epoch(z);
        for _ in 0..z {
            record_content_play(&mut h, (z % 3) as usize, Mood::Content);
        }
        record_content_play(&mut h, 0, Mood::Discontent);
        assert_eq!(h.current.last_play, Some(0));
        // Window covers epochs z - ⌊z/2⌋ ..= z.
        let mut want = [0u64; 3];
        for e in (z - z / 2)..=z {
            want[(e % 3) as usize] += u64::from(e);
        }
        assert_eq!(h.window_sum(z), want.to_vec(), "epoch {z}");
        assert_eq!(best_ris(&h, z), argmax(want.iter().map(|&c| c as f64)).unwrap());
        h.finish_epoch();
    }
    // Epoch 7 needs epochs 4..=6 for its window and epoch 3 for the baseline.
    assert!(h.record(2).is_none());
    assert!(h.record(3).is_some());
}

fn clouds(rng: &mut impl Rng) -> (Vec<(f64, f64)>, Vec<usize>) {
    let centres = [(0.0, 0.0), (100.0, 0.0), (50.0, 90.0)];
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for (c, &(x, y)) in centres.iter().enumerate() {
        for _ in 0..20 {
            pts.push((x + rng.random_range(-3.0..3.0), y + rng.random_range(-3.0..3.0)));
            labels.push(c);
        }
    }
    (pts, labels)
}

#[test]
fn kmeans_recovers_separated_clouds() {
    let mut rng = common::rng(51);
    for _ in 0..20 {
        let (pts, labels) = clouds(&mut rng);
        let res = kmeans(&pts, 3, &mut rng).unwrap();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                assert_eq!(labels[i] == labels[j], res.assignment[i] == res.assignment[j]);
            }
        }
        assert!(res.iterations <= 100);
    }
    assert!(kmeans(&[(0.0, 0.0)], 2, &mut rng).is_err());
    let same = kmeans(&[(1.0, 1.0); 4], 2, &mut rng).unwrap();
    assert_eq!(same.assignment.len(), 4);
}

#[test]
fn round_robin_flags_one_member_per_cluster() {
    let disc = Disc {
        center_x: 150.0,
        center_y: 150.0,
        radius: 22.5,
    };
    let mut rng = common::rng(61);
    let devices = sample_device_positions(&disc, 11, 1.5, 5.0, &mut rng).unwrap();
    let sched = cluster_round_robin(&devices, 3, &mut rng).unwrap();
    let non_empty = sched.members.iter().filter(|m| !m.is_empty()).count();
    assert_eq!(non_empty, 3);
    for slot in 0..200u64 {
        let flagged: Vec<usize> = (0..11).filter(|&d| sched.is_flagged(d, slot)).collect();
        assert_eq!(flagged.len(), 3, "slot {slot}");
        let mut listed = sched.flagged(slot);
        listed.sort_unstable();
        assert_eq!(flagged, listed);
    }
    for d in 0..11 {
        let size = sched.members[sched.assignment[d]].len() as u64;
        let hits = (0..size * 10).filter(|&t| sched.is_flagged(d, t)).count() as u64;
        assert_eq!(hits, 10);
    }
    let few = vec![Position3D::new(0.0, 0.0, 0.0); 2];
    assert!(matches!(
        cluster_round_robin(&few, 3, &mut rng),
        Err(Error::TooFewDevices(_))
    ));
}

#[test]
fn cluster_schedule_from_assignment() {
    let s = ClusterSchedule::from_assignment(vec![1, 0, 1, 1], 2);
    assert_eq!(s.members, vec![vec![1], vec![0, 2, 3]]);
    assert_eq!(s.flagged(0), vec![1, 0]);
    assert_eq!(s.flagged(1), vec![1, 2]);
    assert_eq!(s.flagged(5), vec![1, 3]);
}

/// Drives one learner alone against fixed success probabilities.
fn solo_run(learner: &mut Learner, theta: &[Vec<f64>], busy_p: f64, slots: u64, seed: u64) -> Vec<Action> {
    let mut env = common::rng(seed ^ 0xABCD);
    let mut rng = common::rng(seed);
    let mut out = Vec::with_capacity(slots as usize);
    for _ in 0..slots {
        let busy: Vec<bool> = (0..theta.len()).map(|_| env.random::<f64>() < busy_p).collect();
        let action = learner.decide(|k| busy[k], &mut rng);
        let fb = match action {
            Action::Ris { ris, .. } if busy[ris] => Feedback::Busy,
            Action::Ris { ris, sf } => Feedback::from_success(env.random::<f64>() < theta[ris][sf]),
            Action::Direct { sf } => Feedback::from_success(env.random::<f64>() < 0.05 * (sf + 1) as f64),
        };
        learner.observe(fb, &mut rng);
        out.push(action);
    }
    out
}

#[test]
fn lone_learner_finds_best_ris_and_sf() {
    let schedule = EpochSchedule::new(1000.0, 1000.0, 100.0, 0.0);
    // Rate-weighted rewards on RIS 1: 2.7, 1.9, 1.0. SF 0 is best on every RIS.
    let theta = vec![vec![0.5, 0.6, 0.9], vec![0.9, 0.95, 1.0], vec![0.3, 0.35, 0.5]];
    let mut found = 0;
    for seed in 0..10u64 {
        let mut learner = Learner::new(
            LearnerConfig::e2boost(schedule),
            3,
            vec![3.0, 2.0, 1.0],
            &mut common::rng(seed),
        );
        solo_run(&mut learner, &theta, 0.1, schedule.total_slots(6), seed + 100);
        assert_eq!(learner.epoch(), 7);
        assert_eq!(learner.phase(), Phase::Explore);
        found += usize::from(learner.best_ris() == 1 && learner.best_sf() == 0);
    }
    assert!(found >= 8, "{found}/10 runs settled on RIS 1 with SF 0");
}

#[test]
fn phase_cursor_follows_schedule() {
    let schedule = EpochSchedule::new(10.0, 20.0, 5.0, 0.0);
    let mut learner = Learner::new(LearnerConfig::got(schedule), 2, vec![1.0, 0.5], &mut common::rng(3));
    let theta = vec![vec![0.5, 0.9]; 2];
    solo_run(&mut learner, &theta, 0.3, 10, 1);
    assert_eq!(learner.phase(), Phase::Game);
    solo_run(&mut learner, &theta, 0.3, 20, 2);
    assert_eq!(learner.phase(), Phase::Exploit);
    solo_run(&mut learner, &theta, 0.3, 10, 3);
    assert_eq!((learner.epoch(), learner.phase()), (2, Phase::Explore));
    // Direct-only slots leave the cursor alone.
    let before = learner.slot_in_phase();
    let mut rng = common::rng(9);
    for _ in 0..5 {
        assert!(matches!(learner.decide_direct_only(&mut rng), Action::Direct { .. }));
        learner.observe(Feedback::Failure, &mut rng);
    }
    assert_eq!(learner.slot_in_phase(), before);
}

#[test]
fn joint_and_ris_spaces_coincide_with_one_sf() {
    let schedule = EpochSchedule::new(50.0, 50.0, 10.0, 0.0);
    let theta = vec![vec![0.4], vec![0.9], vec![0.6]];
    let mut got = Learner::new(LearnerConfig::got(schedule), 3, vec![1.0], &mut common::rng(5));
    let mut fixed = Learner::new(
        LearnerConfig::fixed_eps(schedule, 1.0),
        3,
        vec![1.0],
        &mut common::rng(5),
    );
    let slots = schedule.total_slots(5);
    assert_eq!(
        solo_run(&mut got, &theta, 0.2, slots, 77),
        solo_run(&mut fixed, &theta, 0.2, slots, 77)
    );
}

#[test]
fn learner_state_round_trips_through_json() {
    let schedule = EpochSchedule::new(40.0, 40.0, 10.0, 0.0);
    let theta = vec![vec![0.2, 0.7], vec![0.9, 0.95]];
    let mut learner = Learner::new(LearnerConfig::e2boost(schedule), 2, vec![2.0, 1.0], &mut common::rng(8));
    solo_run(&mut learner, &theta, 0.2, 333, 4);
    let text = serde_json::to_string(&learner).unwrap();
    let mut restored: Learner = serde_json::from_str(&text).unwrap();
    assert_eq!(restored, learner);
    assert_eq!(
        solo_run(&mut restored, &theta, 0.2, 500, 5),
        solo_run(&mut learner, &theta, 0.2, 500, 5)
    );
}
