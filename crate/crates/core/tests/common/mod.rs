#![allow(dead_code)]

use e2boost_core::bandit::Action;
use e2boost_core::baselines::OptimalProfile;
use e2boost_core::channel::SuccessProbTable;
use e2boost_core::netmodel::{PhaseShiftMode, Position3D, RadioConstants, RisGeometry, Scenario, SfTable, ShadowMean};
use e2boost_core::sim::Environment;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dbm(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn radio() -> RadioConstants {
    let mut r = RadioConstants {
        tx_power: dbm(20.0),
        noise_power: dbm(-98.0),
        interference_mu: 0.0,
        interference_sigma: 0.5,
        carrier_freq: 5.9e9,
        bandwidth: 40e6,
        code_rate: 0.5,
        rician_factor: 4.0,
        antenna_gain: 1.0,
        pathloss_exp: 3.45,
        reflection_amplitude: 1.0,
        pin_bits: 8,
        shadow_mu: ShadowMean::Uma,
        shadow_sigma: 8.0 * std::f64::consts::LN_10 / 10.0,
    };
    r.calibrate_interference(dbm(-95.0)).unwrap();
    r
}

pub const BS: Position3D = Position3D::new(83.5, 11.2, 20.0);
pub const UE: Position3D = Position3D::new(150.0, 150.0, 1.5);
pub const RIS_CENTERS: [Position3D; 3] = [
    Position3D::new(189.1, 141.4, 10.0),
    Position3D::new(94.3, 142.9, 10.0),
    Position3D::new(98.3, 185.3, 10.0),
];
pub const DEVICES: [Position3D; 3] = [
    Position3D::new(160.2, 136.6, 1.5),
    Position3D::new(155.0, 163.0, 1.5),
    Position3D::new(145.0, 146.0, 1.5),
];

/// Three devices and three panels of `size × size` elements.
pub fn three_ris(size: usize) -> Scenario {
    let riss = RIS_CENTERS
        .iter()
        .map(|c| RisGeometry::oriented(*c, size, size, 0.01, 0.01, &BS, &UE).unwrap())
        .collect();
    Scenario {
        bs: BS,
        ues: vec![UE],
        devices: DEVICES.to_vec(),
        riss,
        sf_table: SfTable::lora_default(),
        radio: radio(),
        ris_active_prob: vec![0.2; 3],
        phase_shift_mode: PhaseShiftMode::OptimalForUes,
        min_device_distance: 5.0,
    }
}

/// Table whose rows are given explicitly.
pub fn table(n: usize, k: usize, m: usize, ris: Vec<f64>, direct: Vec<f64>) -> SuccessProbTable {
    SuccessProbTable::from_probabilities(n, k, m, ris, direct, 0).unwrap()
}

pub fn world(t: SuccessProbTable, rates: Vec<f64>, active: Vec<f64>) -> (Environment, OptimalProfile) {
    let profile = OptimalProfile::from_oracle(&t, &rates).unwrap();
    (Environment::new(t, rates, active).unwrap(), profile)
}

/// Every `(ris, sf)` action followed by every direct action.
pub fn all_actions(k: usize, m: usize) -> Vec<Action> {
    let mut out: Vec<Action> = (0..k * m).map(|i| Action::Ris { ris: i / m, sf: i % m }).collect();
    out.extend((0..m).map(|sf| Action::Direct { sf }));
    out
}
