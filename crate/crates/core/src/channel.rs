//! Propagation model and the success-probability oracle.
//!
//! An RIS-assisted link sums, over all panel elements, the element's
//! reflection factor times a Rician mix of a deterministic line-of-sight
//! term and a scattered complex Gaussian term. The direct device-to-BS link
//! is log-normal shadowed Rayleigh fading. SINR samples are compared against
//! per-SF thresholds to estimate success probabilities.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::netmodel::{PhaseShiftMode, Position3D, RadioConstants, RisGeometry, Scenario, ShadowMean};
use crate::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Complex channel coefficient.
pub type ComplexGain = Complex64;

/// Quantized per-element phase indices of one panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseShiftMatrix {
    pub rows: usize,
    pub cols: usize,
    pub bits: u32,
    /// Row-major phase indices in `0..2^bits`.
    pub indices: Vec<u32>,
}

impl PhaseShiftMatrix {
    pub fn phase(&self, element: usize) -> f64 {
        phase_from_index(self.indices[element], self.bits)
    }

    pub fn phases(&self) -> impl Iterator<Item = f64> + '_ {
        self.indices.iter().map(move |&i| phase_from_index(i, self.bits))
    }
}

/// Phase in radians for index `rho` of a `bits`-bit phase shifter.
pub fn phase_from_index(rho: u32, bits: u32) -> f64 {
    PI * rho as f64 / (1u64 << (bits - 1)) as f64
}

/// Element reflection factor `A·e^{-jτ}`.
pub fn reflection_factor(rho: u32, bits: u32, amplitude: f64) -> Result<ComplexGain, Error> {
    if bits == 0 || bits > 30 || rho >= (1u32 << bits) {
        return Err(Error::Domain(format!("phase index {rho} outside a {bits}-bit range")));
    }
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(Error::Domain(format!(
            "reflection amplitude {amplitude} outside (0, 1]"
        )));
    }
    Ok(Complex64::from_polar(amplitude, -phase_from_index(rho, bits)))
}

/// Same phase index on every element.
pub fn constant_phase_shifts(geom: &RisGeometry, rho: u32, bits: u32) -> Result<PhaseShiftMatrix, Error> {
    if bits == 0 || bits > 30 || rho >= (1u32 << bits) {
        return Err(Error::Domain(format!("phase index {rho} outside a {bits}-bit range")));
    }
    Ok(PhaseShiftMatrix {
        rows: geom.rows,
        cols: geom.cols,
        bits,
        indices: vec![rho; geom.element_count()],
    })
}

/// Phases that align every BS→element→target path, quantized down to the
/// shifter resolution.
pub fn optimal_phase_shifts(
    geom: &RisGeometry,
    bs: &Position3D,
    target: &Position3D,
    radio: &RadioConstants,
) -> PhaseShiftMatrix {
    let bits = radio.pin_bits;
    let levels = (1u64 << bits) as f64;
    let lambda = radio.wavelength();
    let indices = geom
        .element_positions
        .iter()
        .map(|e| {
            let path = bs.distance(e) + e.distance(target);
            let step = (-path / lambda * levels).floor() % levels;
            (if step < 0.0 { step + levels } else { step }) as u32 % (1u32 << bits)
        })
        .collect();
    PhaseShiftMatrix {
        rows: geom.rows,
        cols: geom.cols,
        bits,
        indices,
    }
}

/// Phase configuration of RIS `k` under the scenario's phase mode.
pub fn scenario_phase_shifts(s: &Scenario, k: usize) -> Result<PhaseShiftMatrix, Error> {
    let geom = &s.riss[k];
    match s.phase_shift_mode {
        PhaseShiftMode::OptimalForUes => {
            let ue = s.ue_centroid().ok_or(Error::Invalid("scenario has no UEs".into()))?;
            Ok(optimal_phase_shifts(geom, &s.bs, &ue, &s.radio))
        }
        PhaseShiftMode::Constant { rho } => constant_phase_shifts(geom, rho, s.radio.pin_bits),
    }
}

/// Line-of-sight cascade through one element.
pub fn los_component(
    bs: &Position3D,
    elem: &Position3D,
    dev: &Position3D,
    radio: &RadioConstants,
) -> Result<ComplexGain, Error> {
    let d_bs = bs.distance(elem);
    let d_dev = elem.distance(dev);
    if !(d_bs > 0.0 && d_dev > 0.0) {
        return Err(Error::Domain("zero distance on a reflected path".into()));
    }
    Ok(los_term(d_bs, d_dev, radio))
}

fn los_term(d_bs: f64, d_dev: f64, radio: &RadioConstants) -> ComplexGain {
    let amplitude = (radio.antenna_gain * d_bs.powf(-radio.pathloss_exp) * d_dev.powf(-radio.pathloss_exp)).sqrt();
    Complex64::from_polar(amplitude, -2.0 * PI * (d_bs + d_dev) / radio.wavelength())
}

/// UMa NLoS path loss as a linear power gain.
pub fn nlos_pathloss_uma(distance: f64, fc_ghz: f64, device_height: f64) -> f64 {
    let db = 13.54 + 39.08 * distance.log10() + 20.0 * fc_ghz.log10() - 0.6 * (device_height - 1.5);
    10f64.powf(-db / 10.0)
}

/// Amplitude weights of the LoS and scattered parts for Rician factor `zeta`.
pub fn rician_weights(zeta: f64) -> (f64, f64) {
    if zeta.is_infinite() {
        (1.0, 0.0)
    } else {
        ((zeta / (zeta + 1.0)).sqrt(), (1.0 / (zeta + 1.0)).sqrt())
    }
}

/// Circularly symmetric complex normal with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> ComplexGain {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Effective RIS channel drawn element by element.
///
/// This is the reference sampler; [`RisLink`] draws from the same
/// distribution in constant time.
pub fn sample_ris_channel<R: Rng + ?Sized>(
    geom: &RisGeometry,
    phases: &PhaseShiftMatrix,
    dev: &Position3D,
    bs: &Position3D,
    radio: &RadioConstants,
    rng: &mut R,
) -> ComplexGain {
    let (w_los, w_nlos) = rician_weights(radio.rician_factor);
    let fc = radio.carrier_freq_ghz();
    let mut acc = Complex64::new(0.0, 0.0);
    for (e, elem) in geom.element_positions.iter().enumerate() {
        let factor = Complex64::from_polar(radio.reflection_amplitude, -phases.phase(e));
        let (d_bs, d_dev) = (bs.distance(elem), elem.distance(dev));
        let mut h = los_term(d_bs, d_dev, radio) * w_los;
        if w_nlos > 0.0 {
            let pl = nlos_pathloss_uma(d_bs + d_dev, fc, dev.z);
            h += complex_normal(rng) * (w_nlos * pl.sqrt());
        }
        acc += factor * h;
    }
    acc
}

/// Precomputed sufficient statistics of one device-RIS link.
///
/// The scattered terms are independent complex Gaussians, so their weighted
/// sum is again complex Gaussian with variance equal to the sum of the
/// per-element variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisLink {
    /// Weighted LoS sum `w_los · Σ A_e h̃_e`.
    pub los: ComplexGain,
    /// Standard deviation scale of the aggregated scattered term.
    pub nlos_scale: f64,
    /// `Σ |A_e h̃_e|`, the fully coherent upper bound of the LoS sum.
    pub los_magnitude_sum: f64,
    /// `|Σ A_e h̃_e|` before the Rician weight.
    pub los_combined: f64,
}

impl RisLink {
    pub fn new(
        geom: &RisGeometry,
        phases: &PhaseShiftMatrix,
        dev: &Position3D,
        bs: &Position3D,
        radio: &RadioConstants,
    ) -> Self {
        let (w_los, w_nlos) = rician_weights(radio.rician_factor);
        let fc = radio.carrier_freq_ghz();
        let a2 = radio.reflection_amplitude * radio.reflection_amplitude;
        let mut los = Complex64::new(0.0, 0.0);
        let mut magnitude_sum = 0.0;
        let mut nlos_var = 0.0;
        for (e, elem) in geom.element_positions.iter().enumerate() {
            let factor = Complex64::from_polar(radio.reflection_amplitude, -phases.phase(e));
            let (d_bs, d_dev) = (bs.distance(elem), elem.distance(dev));
            let term = factor * los_term(d_bs, d_dev, radio);
            magnitude_sum += term.norm();
            los += term;
            nlos_var += a2 * nlos_pathloss_uma(d_bs + d_dev, fc, dev.z);
        }
        Self {
            los: los * w_los,
            nlos_scale: w_nlos * nlos_var.sqrt(),
            los_magnitude_sum: magnitude_sum,
            los_combined: los.norm(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexGain {
        if self.nlos_scale > 0.0 {
            self.los + complex_normal(rng) * self.nlos_scale
        } else {
            self.los
        }
    }

    /// Expected channel power `E|h|²`.
    pub fn mean_power(&self) -> f64 {
        self.los.norm_sqr() + self.nlos_scale * self.nlos_scale
    }
}

/// Log-normal shadowed Rayleigh link from a device straight to the BS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectLink {
    pub log_mean: f64,
    pub log_sigma: f64,
}

impl DirectLink {
    pub fn new(dev: &Position3D, bs: &Position3D, radio: &RadioConstants) -> Self {
        let sigma = radio.shadow_sigma;
        let log_mean = match radio.shadow_mu {
            ShadowMean::Fixed(mu) => mu,
            ShadowMean::Uma => {
                nlos_pathloss_uma(dev.distance(bs), radio.carrier_freq_ghz(), dev.z).ln() - 0.5 * sigma * sigma
            }
        };
        Self {
            log_mean,
            log_sigma: sigma,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexGain {
        let z: f64 = StandardNormal.sample(rng);
        let shadow = (self.log_mean + self.log_sigma * z).exp();
        complex_normal(rng) * shadow.sqrt()
    }

    pub fn mean_power(&self) -> f64 {
        (self.log_mean + 0.5 * self.log_sigma * self.log_sigma).exp()
    }
}

pub fn sample_direct_channel<R: Rng + ?Sized>(
    dev: &Position3D,
    bs: &Position3D,
    radio: &RadioConstants,
    rng: &mut R,
) -> ComplexGain {
    DirectLink::new(dev, bs, radio).sample(rng)
}

/// Linear SINR.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SinrSample(pub f64);

pub fn received_sinr(gain: ComplexGain, radio: &RadioConstants) -> SinrSample {
    SinrSample(radio.tx_power * gain.norm_sqr() / radio.impairment_power())
}

/// Chirp spread spectrum bit rate `B·sf/2^sf·CR`.
pub fn data_rate(sf: u32, bandwidth: f64, code_rate: f64) -> f64 {
    bandwidth * sf as f64 / 2f64.powi(sf as i32) * code_rate
}

/// Every link of a scenario, ready for per-slot sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub n_devices: usize,
    pub n_ris: usize,
    /// Device-major `[n][k]`.
    pub ris_links: Vec<RisLink>,
    pub direct_links: Vec<DirectLink>,
    pub snr_scale: f64,
    pub thresholds: Vec<f64>,
}

impl ChannelModel {
    pub fn build(s: &Scenario) -> Result<Self, Error> {
        let phases = (0..s.n_ris())
            .map(|k| scenario_phase_shifts(s, k))
            .collect::<Result<Vec<_>, _>>()?;
        let mut ris_links = Vec::with_capacity(s.n_devices() * s.n_ris());
        for dev in &s.devices {
            for (geom, ph) in s.riss.iter().zip(&phases) {
                ris_links.push(RisLink::new(geom, ph, dev, &s.bs, &s.radio));
            }
        }
        let direct_links = s.devices.iter().map(|d| DirectLink::new(d, &s.bs, &s.radio)).collect();
        Ok(Self {
            n_devices: s.n_devices(),
            n_ris: s.n_ris(),
            ris_links,
            direct_links,
            snr_scale: s.radio.tx_power / s.radio.impairment_power(),
            thresholds: s.sf_table.thresholds.clone(),
        })
    }

    pub fn ris_link(&self, n: usize, k: usize) -> &RisLink {
        &self.ris_links[n * self.n_ris + k]
    }

    pub fn sample_ris_sinr<R: Rng + ?Sized>(&self, n: usize, k: usize, rng: &mut R) -> f64 {
        self.snr_scale * self.ris_link(n, k).sample(rng).norm_sqr()
    }

    pub fn sample_direct_sinr<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> f64 {
        self.snr_scale * self.direct_links[n].sample(rng).norm_sqr()
    }
}

/// Per-arm success probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessProbTable {
    pub n_devices: usize,
    pub n_ris: usize,
    pub n_sf: usize,
    /// Repaired `[n][k][m]` probabilities, non-decreasing in `m`.
    pub ris_assisted: Vec<f64>,
    /// Repaired `[n][m]` probabilities, non-decreasing in `m`.
    pub direct: Vec<f64>,
    /// Raw Monte Carlo frequencies before repair.
    pub raw_ris_assisted: Vec<f64>,
    pub raw_direct: Vec<f64>,
    pub sample_count: u64,
}

impl SuccessProbTable {
    /// Table from explicit probabilities; rows are repaired to be
    /// non-decreasing and the inputs kept as the raw values.
    pub fn from_probabilities(
        n_devices: usize,
        n_ris: usize,
        n_sf: usize,
        ris_assisted: Vec<f64>,
        direct: Vec<f64>,
        sample_count: u64,
    ) -> Result<Self, Error> {
        if ris_assisted.len() != n_devices * n_ris * n_sf || direct.len() != n_devices * n_sf || n_sf == 0 {
            return Err(Error::Invalid("success table dimensions do not match".into()));
        }
        if ris_assisted.iter().chain(&direct).any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Invalid("success probabilities must lie in [0, 1]".into()));
        }
        let repair = |raw: &[f64]| -> Vec<f64> { raw.chunks(n_sf).flat_map(isotonic_non_decreasing).collect() };
        Ok(Self {
            n_devices,
            n_ris,
            n_sf,
            ris_assisted: repair(&ris_assisted),
            direct: repair(&direct),
            raw_ris_assisted: ris_assisted,
            raw_direct: direct,
            sample_count,
        })
    }

    pub fn ris(&self, n: usize, k: usize, m: usize) -> f64 {
        self.ris_assisted[(n * self.n_ris + k) * self.n_sf + m]
    }

    pub fn direct(&self, n: usize, m: usize) -> f64 {
        self.direct[n * self.n_sf + m]
    }

    pub fn ris_row(&self, n: usize, k: usize) -> &[f64] {
        let start = (n * self.n_ris + k) * self.n_sf;
        &self.ris_assisted[start..start + self.n_sf]
    }

    pub fn direct_row(&self, n: usize) -> &[f64] {
        &self.direct[n * self.n_sf..(n + 1) * self.n_sf]
    }

    pub fn raw_ris_row(&self, n: usize, k: usize) -> &[f64] {
        let start = (n * self.n_ris + k) * self.n_sf;
        &self.raw_ris_assisted[start..start + self.n_sf]
    }

    pub fn raw_direct_row(&self, n: usize) -> &[f64] {
        &self.raw_direct[n * self.n_sf..(n + 1) * self.n_sf]
    }
}

/// Estimates success probabilities with `trials` channel draws per link.
///
/// Draw order is device, then RIS, then the direct link, so a fixed RNG
/// state yields a bit-identical table.
pub fn estimate_success_probs<R: Rng + ?Sized>(
    s: &Scenario,
    trials: u64,
    rng: &mut R,
) -> Result<SuccessProbTable, Error> {
    if trials == 0 {
        return Err(Error::Invalid("oracle trial count must be at least 1".into()));
    }
    let model = ChannelModel::build(s)?;
    estimate_with_model(&model, trials, rng)
}

pub fn estimate_with_model<R: Rng + ?Sized>(
    model: &ChannelModel,
    trials: u64,
    rng: &mut R,
) -> Result<SuccessProbTable, Error> {
    let (n_dev, n_ris, n_sf) = (model.n_devices, model.n_ris, model.thresholds.len());
    let mut counts = vec![0u64; n_sf];
    let tally = |sinr: f64, counts: &mut [u64]| {
        for (c, &psi) in counts.iter_mut().zip(&model.thresholds) {
            if sinr >= psi {
                *c += 1;
            }
        }
    };
    let mut ris = Vec::with_capacity(n_dev * n_ris * n_sf);
    let mut direct = Vec::with_capacity(n_dev * n_sf);
    for n in 0..n_dev {
        for k in 0..n_ris {
            counts.fill(0);
            for _ in 0..trials {
                tally(model.sample_ris_sinr(n, k, rng), &mut counts);
            }
            ris.extend(counts.iter().map(|&c| c as f64 / trials as f64));
        }
        counts.fill(0);
        for _ in 0..trials {
            tally(model.sample_direct_sinr(n, rng), &mut counts);
        }
        direct.extend(counts.iter().map(|&c| c as f64 / trials as f64));
    }
    SuccessProbTable::from_probabilities(n_dev, n_ris, n_sf, ris, direct, trials)
}

/// Least-squares non-decreasing fit with unit weights (pool adjacent
/// violators).
pub fn isotonic_non_decreasing(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (hi_sum, hi_n) = blocks[blocks.len() - 1];
            let (lo_sum, lo_n) = blocks[blocks.len() - 2];
            if lo_sum / lo_n as f64 <= hi_sum / hi_n as f64 {
                break;
            }
            blocks.pop();
            let last = blocks.len() - 1;
            blocks[last] = (lo_sum + hi_sum, lo_n + hi_n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(sum, n)| core::iter::repeat_n(sum / n as f64, n))
        .collect()
}

/// Number of adjacent pairs with `row[m] > row[m+1]`.
pub fn monotonicity_violations(row: &[f64]) -> usize {
    row.windows(2).filter(|w| w[0] > w[1]).count()
}
