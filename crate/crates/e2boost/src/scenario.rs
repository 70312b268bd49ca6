//! Scenario files.
//!
//! A scenario is a TOML document. Positions are meters, powers and noise
//! are dBm, the carrier is GHz, bandwidth is MHz and the shadowing spread is
//! dB. Everything is converted to SI linear units on load.

use std::path::Path;

use e2boost_core::netmodel::{
    validate_scenario, Disc, PhaseShiftMode, Position3D, RadioConstants, RisGeometry, Scenario, SfTable, ShadowMean,
    DEFAULT_ELEMENT_SPACING, DEFAULT_PANEL_SIZE,
};
use serde::{Deserialize, Serialize};

use crate::error::AppError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    pub bs: BsSection,
    pub ues: UeSection,
    pub devices: DeviceSection,
    pub ris: Vec<RisSection>,
    pub radio: RadioSection,
    #[serde(default)]
    pub sf_table: Option<SfSection>,
    #[serde(default)]
    pub phase_shift: PhaseSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsSection {
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeSection {
    pub positions: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    #[serde(default)]
    pub positions: Vec<[f64; 3]>,
    #[serde(default = "default_min_distance")]
    pub min_distance: f64,
    /// Resample positions uniformly in a disc for every trial.
    #[serde(default)]
    pub random: Option<RandomPlacement>,
}

fn default_min_distance() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPlacement {
    pub count: usize,
    pub center: [f64; 2],
    pub diameter: f64,
    #[serde(default = "default_device_height")]
    pub height: f64,
}

fn default_device_height() -> f64 {
    1.5
}

impl RandomPlacement {
    pub fn disc(&self) -> Disc {
        Disc {
            center_x: self.center[0],
            center_y: self.center[1],
            radius: self.diameter / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisSection {
    pub center: [f64; 3],
    #[serde(default = "default_panel")]
    pub rows: usize,
    #[serde(default = "default_panel")]
    pub cols: usize,
    #[serde(default = "default_spacing")]
    pub spacing_v: f64,
    #[serde(default = "default_spacing")]
    pub spacing_h: f64,
    pub active_prob: f64,
}

fn default_panel() -> usize {
    DEFAULT_PANEL_SIZE
}

fn default_spacing() -> f64 {
    DEFAULT_ELEMENT_SPACING
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShadowMuSpec {
    Keyword(String),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    /// Total noise plus mean interference; sets the interference mean.
    #[serde(default)]
    pub noise_plus_interference_dbm: Option<f64>,
    /// Natural-log interference mean, used when no total is given.
    #[serde(default)]
    pub interference_mu: Option<f64>,
    #[serde(default)]
    pub interference_sigma: f64,
    pub carrier_freq_ghz: f64,
    pub bandwidth_mhz: f64,
    #[serde(default = "default_code_rate")]
    pub code_rate: f64,
    pub rician_factor: f64,
    #[serde(default = "one")]
    pub antenna_gain: f64,
    pub pathloss_exp: f64,
    #[serde(default = "one")]
    pub reflection_amplitude: f64,
    #[serde(default = "default_bits")]
    pub pin_bits: u32,
    #[serde(default = "default_shadow_db")]
    pub shadow_sigma_db: f64,
    #[serde(default = "default_shadow_mu")]
    pub shadow_mu: ShadowMuSpec,
}

fn default_code_rate() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn default_bits() -> u32 {
    8
}
fn default_shadow_db() -> f64 {
    8.0
}
fn default_shadow_mu() -> ShadowMuSpec {
    ShadowMuSpec::Keyword("uma".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfSection {
    pub sfs: Vec<u32>,
    /// Linear SINR thresholds, one per SF.
    pub thresholds: Vec<f64>,
    /// Explicit rates in bits per second; derived from bandwidth when absent.
    #[serde(default)]
    pub rates_bps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    #[serde(default = "default_phase_mode")]
    pub mode: String,
    #[serde(default)]
    pub rho: Option<u32>,
}

fn default_phase_mode() -> String {
    "optimal".into()
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            mode: default_phase_mode(),
            rho: None,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_neper_sigma(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 10.0
}

fn point([x, y, z]: [f64; 3]) -> Position3D {
    Position3D::new(x, y, z)
}

/// Parses `optimal` or `constant:<rho>`.
pub fn parse_phase_mode(text: &str) -> Result<PhaseShiftMode, AppError> {
    let text = text.trim();
    if text == "optimal" {
        return Ok(PhaseShiftMode::OptimalForUes);
    }
    let rho = text
        .strip_prefix("constant:")
        .ok_or_else(|| AppError::config(format!("phase mode '{text}' is not 'optimal' or 'constant:<rho>'")))?;
    let rho = rho
        .parse()
        .map_err(|_| AppError::config(format!("phase index '{rho}' is not a non-negative integer")))?;
    Ok(PhaseShiftMode::Constant { rho })
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::config(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| AppError::config(format!("{}: {e}", path.display())))
    }

    pub fn is_random(&self) -> bool {
        self.devices.random.is_some()
    }

    fn radio(&self) -> Result<RadioConstants, AppError> {
        let r = &self.radio;
        let shadow_mu = match &r.shadow_mu {
            ShadowMuSpec::Keyword(k) if k == "uma" => ShadowMean::Uma,
            ShadowMuSpec::Keyword(k) => {
                return Err(AppError::config(format!("radio.shadow_mu: unknown keyword '{k}'")));
            }
            ShadowMuSpec::Value(v) => ShadowMean::Fixed(*v),
        };
        let mut radio = RadioConstants {
            tx_power: dbm_to_watts(r.tx_power_dbm),
            noise_power: dbm_to_watts(r.noise_dbm),
            interference_mu: r.interference_mu.unwrap_or(f64::NEG_INFINITY),
            interference_sigma: r.interference_sigma,
            carrier_freq: r.carrier_freq_ghz * 1e9,
            bandwidth: r.bandwidth_mhz * 1e6,
            code_rate: r.code_rate,
            rician_factor: r.rician_factor,
            antenna_gain: r.antenna_gain,
            pathloss_exp: r.pathloss_exp,
            reflection_amplitude: r.reflection_amplitude,
            pin_bits: r.pin_bits,
            shadow_mu,
            shadow_sigma: db_to_neper_sigma(r.shadow_sigma_db),
        };
        match (r.noise_plus_interference_dbm, r.interference_mu) {
            (Some(total), None) => radio
                .calibrate_interference(dbm_to_watts(total))
                .map_err(|e| AppError::config(format!("radio.noise_plus_interference_dbm: {e}")))?,
            (None, Some(_)) => {}
            _ => {
                return Err(AppError::config(
                    "radio: give exactly one of noise_plus_interference_dbm or interference_mu",
                ))
            }
        }
        Ok(radio)
    }

    /// Builds a validated scenario. `devices` replaces the listed device
    /// positions, which random placement needs.
    pub fn build_with_devices(&self, devices: Vec<Position3D>) -> Result<Scenario, AppError> {
        let radio = self.radio()?;
        let bs = point(self.bs.position);
        let ues: Vec<Position3D> = self.ues.positions.iter().copied().map(point).collect();
        let ue_centroid = e2boost_core::netmodel::centroid(&ues)
            .ok_or_else(|| AppError::config("ues.positions: at least one UE is required"))?;
        let riss = self
            .ris
            .iter()
            .enumerate()
            .map(|(k, r)| {
                RisGeometry::oriented(
                    point(r.center),
                    r.rows,
                    r.cols,
                    r.spacing_v,
                    r.spacing_h,
                    &bs,
                    &ue_centroid,
                )
                .map_err(|e| AppError::config(format!("ris[{k}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sf_table = match &self.sf_table {
            None => SfTable::from_bandwidth(
                SfTable::lora_default().sfs,
                SfTable::lora_default().thresholds,
                radio.bandwidth,
                radio.code_rate,
            ),
            Some(t) => match &t.rates_bps {
                Some(rates) => SfTable {
                    sfs: t.sfs.clone(),
                    rates: rates.clone(),
                    thresholds: t.thresholds.clone(),
                },
                None => SfTable::from_bandwidth(t.sfs.clone(), t.thresholds.clone(), radio.bandwidth, radio.code_rate),
            },
        };
        let phase_shift_mode = match self.phase_shift.mode.as_str() {
            "optimal" => PhaseShiftMode::OptimalForUes,
            "constant" => PhaseShiftMode::Constant {
                rho: self
                    .phase_shift
                    .rho
                    .ok_or_else(|| AppError::config("phase_shift.rho: required for constant mode"))?,
            },
            other => return Err(AppError::config(format!("phase_shift.mode: unknown mode '{other}'"))),
        };
        let scenario = Scenario {
            bs,
            ues,
            devices,
            riss,
            sf_table,
            radio,
            ris_active_prob: self.ris.iter().map(|r| r.active_prob).collect(),
            phase_shift_mode,
            min_device_distance: self.devices.min_distance,
        };
        let violations = validate_scenario(&scenario);
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(AppError::config(format!("invalid scenario: {}", list.join("; "))));
        }
        Ok(scenario)
    }

    /// Builds the scenario with the listed device positions.
    pub fn build(&self) -> Result<Scenario, AppError> {
        self.build_with_devices(self.devices.positions.iter().copied().map(point).collect())
    }
}
