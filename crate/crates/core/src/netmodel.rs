//! Network scenario description: positions, RIS panel geometry, radio
//! constants and the spreading-factor table, plus validation.
//!
//! All quantities are SI and linear. Conversion from dB/dBm happens in the
//! file loader of the companion crate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::Error;

/// A point in meters; `z` is height above ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn distance_xy(&self, other: &Position3D) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.z >= 0.0
    }
}

/// Free function form of [`Position3D::distance`].
pub fn distance(a: &Position3D, b: &Position3D) -> f64 {
    a.distance(b)
}

/// Arithmetic mean of a set of points.
pub fn centroid(points: &[Position3D]) -> Option<Position3D> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    let (sx, sy, sz) = points
        .iter()
        .fold((0.0, 0.0, 0.0), |(x, y, z), p| (x + p.x, y + p.y, z + p.z));
    Some(Position3D::new(sx / n, sy / n, sz / n))
}

/// Rectangular RIS panel. Rows run horizontally along the panel direction,
/// columns stack vertically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisGeometry {
    pub center: Position3D,
    pub rows: usize,
    pub cols: usize,
    pub element_spacing_v: f64,
    pub element_spacing_h: f64,
    pub orientation_angle: f64,
    pub element_positions: Vec<Position3D>,
}

pub const DEFAULT_ELEMENT_SPACING: f64 = 0.01;
pub const DEFAULT_PANEL_SIZE: usize = 101;

impl RisGeometry {
    /// Builds a panel facing the bisector between the BS and the UE centroid.
    pub fn oriented(
        center: Position3D,
        rows: usize,
        cols: usize,
        spacing_v: f64,
        spacing_h: f64,
        bs: &Position3D,
        ue_centroid: &Position3D,
    ) -> Result<Self, Error> {
        let orientation_angle = compute_ris_orientation(bs, &center, ue_centroid)?;
        Ok(Self::with_orientation(
            center,
            rows,
            cols,
            spacing_v,
            spacing_h,
            orientation_angle,
        ))
    }

    pub fn with_orientation(
        center: Position3D,
        rows: usize,
        cols: usize,
        spacing_v: f64,
        spacing_h: f64,
        orientation_angle: f64,
    ) -> Self {
        let mut geom = Self {
            center,
            rows,
            cols,
            element_spacing_v: spacing_v,
            element_spacing_h: spacing_h,
            orientation_angle,
            element_positions: Vec::new(),
        };
        geom.element_positions = compute_element_positions(&geom);
        geom
    }

    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }

    /// One-based central element index `(row, col)`.
    pub fn central_index(&self) -> (usize, usize) {
        (self.rows.div_ceil(2), self.cols.div_ceil(2))
    }

    /// Position of the element at one-based `(row, col)`.
    pub fn element_position(&self, row: usize, col: usize) -> Position3D {
        element_at(self, row, col)
    }
}

fn element_at(geom: &RisGeometry, row: usize, col: usize) -> Position3D {
    let (cr, cc) = geom.central_index();
    let along = (row as f64 - cr as f64) * geom.element_spacing_v;
    let up = (col as f64 - cc as f64) * geom.element_spacing_h;
    let (sin, cos) = geom.orientation_angle.sin_cos();
    Position3D::new(
        along * cos + geom.center.x,
        along * sin + geom.center.y,
        up + geom.center.z,
    )
}

/// Element positions in row-major order (`rows` outer, `cols` inner).
pub fn compute_element_positions(geom: &RisGeometry) -> Vec<Position3D> {
    let mut out = Vec::with_capacity(geom.rows * geom.cols);
    for row in 1..=geom.rows {
        for col in 1..=geom.cols {
            out.push(element_at(geom, row, col));
        }
    }
    out
}

/// Panel orientation angle in the XY plane.
///
/// The panel direction is the normal of the bisector of the angle formed at
/// the RIS by the BS and the UE centroid. When the three points are
/// collinear the bisector is taken perpendicular to the RIS→UE direction.
pub fn compute_ris_orientation(
    bs: &Position3D,
    ris_center: &Position3D,
    ue_centroid: &Position3D,
) -> Result<f64, Error> {
    let rb = (bs.x - ris_center.x, bs.y - ris_center.y);
    let ru = (ue_centroid.x - ris_center.x, ue_centroid.y - ris_center.y);
    let norm_b = rb.0.hypot(rb.1);
    let norm_u = ru.0.hypot(ru.1);
    if !(norm_b > 0.0 && norm_u > 0.0) || !norm_b.is_finite() || !norm_u.is_finite() {
        return Err(Error::DegenerateGeometry);
    }
    let b = (rb.0 / norm_b, rb.1 / norm_b);
    let u = (ru.0 / norm_u, ru.1 / norm_u);
    let cos = b.0 * u.0 + b.1 * u.1;
    let mut rc = if cos >= 0.0 {
        (u.0 - b.0, u.1 - b.1)
    } else {
        (u.0 + b.0, u.1 + b.1)
    };
    let scale = rc.0.hypot(rc.1);
    if scale <= 1e-12 {
        rc = (-u.1, u.0);
    }
    if rc.1 == 0.0 {
        // The bisector lies on the X axis.
        return Ok(if rc.0 == 0.0 { 0.0 } else { -PI / 2.0 });
    }
    Ok(-(rc.0 / rc.1).atan())
}

/// Spreading factors with their data rates and linear SINR thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfTable {
    pub sfs: Vec<u32>,
    pub rates: Vec<f64>,
    pub thresholds: Vec<f64>,
}

impl SfTable {
    /// Table with rates derived from bandwidth and code rate.
    pub fn from_bandwidth(sfs: Vec<u32>, thresholds: Vec<f64>, bandwidth: f64, code_rate: f64) -> Self {
        let rates = sfs
            .iter()
            .map(|&sf| crate::channel::data_rate(sf, bandwidth, code_rate))
            .collect();
        Self { sfs, rates, thresholds }
    }

    /// SF 7..=12 at 40 MHz with rate-1/2 coding.
    pub fn lora_default() -> Self {
        Self::from_bandwidth(
            (7..=12).collect(),
            alloc::vec![4500.0, 4000.0, 3500.0, 3000.0, 2500.0, 2000.0],
            40.0e6,
            0.5,
        )
    }

    pub fn len(&self) -> usize {
        self.sfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sfs.is_empty()
    }
}

/// Mean of the log-normal shadowing term on the direct link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowMean {
    /// Fixed natural-log mean.
    Fixed(f64),
    /// Mean chosen per device so the average power follows the UMa NLoS
    /// path loss at the device to BS distance.
    Uma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioConstants {
    pub tx_power: f64,
    pub noise_power: f64,
    pub interference_mu: f64,
    pub interference_sigma: f64,
    pub carrier_freq: f64,
    pub bandwidth: f64,
    pub code_rate: f64,
    /// Rician factor; `f64::INFINITY` gives a pure LoS channel.
    pub rician_factor: f64,
    pub antenna_gain: f64,
    pub pathloss_exp: f64,
    pub reflection_amplitude: f64,
    pub pin_bits: u32,
    pub shadow_mu: ShadowMean,
    pub shadow_sigma: f64,
}

impl RadioConstants {
    pub fn wavelength(&self) -> f64 {
        crate::channel::SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn carrier_freq_ghz(&self) -> f64 {
        self.carrier_freq / 1e9
    }

    /// Total noise plus mean interference power in the SINR denominator.
    pub fn impairment_power(&self) -> f64 {
        (2.0 * self.interference_mu + 2.0 * self.interference_sigma * self.interference_sigma).exp() + self.noise_power
    }

    /// Chooses `interference_mu` so that noise plus interference equals
    /// `total` watts. Fails when the noise alone already exceeds the total.
    pub fn calibrate_interference(&mut self, total: f64) -> Result<(), Error> {
        let residual = total - self.noise_power;
        if !(residual > 0.0) {
            return Err(Error::Invalid(format!(
                "noise power {} W leaves no room for interference under a total of {} W",
                self.noise_power, total
            )));
        }
        self.interference_mu = 0.5 * residual.ln() - self.interference_sigma * self.interference_sigma;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PhaseShiftMode {
    /// Phases steered towards the UE centroid.
    OptimalForUes,
    /// Every element uses the same integer phase index.
    Constant { rho: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub bs: Position3D,
    pub ues: Vec<Position3D>,
    pub devices: Vec<Position3D>,
    pub riss: Vec<RisGeometry>,
    pub sf_table: SfTable,
    pub radio: RadioConstants,
    pub ris_active_prob: Vec<f64>,
    pub phase_shift_mode: PhaseShiftMode,
    pub min_device_distance: f64,
}

impl Scenario {
    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn n_ris(&self) -> usize {
        self.riss.len()
    }

    pub fn n_sf(&self) -> usize {
        self.sf_table.len()
    }

    pub fn ue_centroid(&self) -> Option<Position3D> {
        centroid(&self.ues)
    }

    /// Recomputes every panel's orientation and element grid from the BS and
    /// the current UE centroid.
    pub fn reorient_panels(&mut self) -> Result<(), Error> {
        let ue = self.ue_centroid().ok_or(Error::Invalid("scenario has no UEs".into()))?;
        for ris in &mut self.riss {
            ris.orientation_angle = compute_ris_orientation(&self.bs, &ris.center, &ue)?;
            ris.element_positions = compute_element_positions(ris);
        }
        Ok(())
    }
}

/// A single invariant failure with the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Checks every scenario invariant and returns all violations found.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |path: String, message: String| out.push(Violation { path, message });

    if !s.bs.is_valid() {
        push("bs".into(), "position must be finite with z >= 0".into());
    }
    if s.ues.is_empty() {
        push("ues".into(), "at least one UE position is required".into());
    }
    for (i, p) in s.ues.iter().enumerate() {
        if !p.is_valid() {
            push(format!("ues[{i}]"), "position must be finite with z >= 0".into());
        }
    }
    if s.devices.is_empty() {
        push("devices".into(), "at least one device is required".into());
    }
    for (i, p) in s.devices.iter().enumerate() {
        if !p.is_valid() {
            push(format!("devices[{i}]"), "position must be finite with z >= 0".into());
        }
    }
    for i in 0..s.devices.len() {
        for j in (i + 1)..s.devices.len() {
            let d = s.devices[i].distance(&s.devices[j]);
            if d < s.min_device_distance {
                push(
                    format!("devices[{j}]"),
                    format!(
                        "distance {d:.3} m to devices[{i}] is below the minimum {} m",
                        s.min_device_distance
                    ),
                );
            }
        }
    }

    if s.riss.is_empty() {
        push("riss".into(), "at least one RIS is required".into());
    }
    for (k, ris) in s.riss.iter().enumerate() {
        if !ris.center.is_valid() {
            push(
                format!("riss[{k}].center"),
                "position must be finite with z >= 0".into(),
            );
        }
        if ris.rows == 0 || ris.cols == 0 {
            push(format!("riss[{k}]"), "rows and cols must be at least 1".into());
        }
        if !(ris.element_spacing_v > 0.0 && ris.element_spacing_h > 0.0) {
            push(format!("riss[{k}]"), "element spacings must be positive".into());
        }
        if ris.element_positions.len() != ris.rows * ris.cols {
            push(
                format!("riss[{k}].element_positions"),
                format!(
                    "expected {} entries, found {}",
                    ris.rows * ris.cols,
                    ris.element_positions.len()
                ),
            );
        } else if ris.element_positions != compute_element_positions(ris) {
            push(
                format!("riss[{k}].element_positions"),
                "grid does not match center, spacing and orientation".into(),
            );
        }
    }

    if s.ris_active_prob.len() != s.riss.len() {
        push(
            "ris_active_prob".into(),
            format!("expected {} entries, found {}", s.riss.len(), s.ris_active_prob.len()),
        );
    }
    for (k, p) in s.ris_active_prob.iter().enumerate() {
        if !(0.0..=1.0).contains(p) {
            push(format!("ris_active_prob[{k}]"), format!("{p} is not a probability"));
        }
    }

    let t = &s.sf_table;
    let m = t.sfs.len();
    if m == 0 {
        push(
            "sf_table.sfs".into(),
            "at least one spreading factor is required".into(),
        );
    }
    if t.rates.len() != m {
        push(
            "sf_table.rates".into(),
            format!("expected {m} entries, found {}", t.rates.len()),
        );
    }
    if t.thresholds.len() != m {
        push(
            "sf_table.thresholds".into(),
            format!("expected {m} entries, found {}", t.thresholds.len()),
        );
    }
    if t.sfs.windows(2).any(|w| w[0] >= w[1]) {
        push(
            "sf_table.sfs".into(),
            "spreading factors must be strictly ascending".into(),
        );
    }
    if t.rates.windows(2).any(|w| !(w[0] > w[1])) || t.rates.iter().any(|r| !(*r > 0.0)) {
        push(
            "sf_table.rates".into(),
            "rates must be positive and strictly descending".into(),
        );
    }
    if t.thresholds.windows(2).any(|w| !(w[0] > w[1])) || t.thresholds.iter().any(|v| !(*v >= 0.0)) {
        push(
            "sf_table.thresholds".into(),
            "thresholds must be non-negative and strictly descending".into(),
        );
    }

    let r = &s.radio;
    let positive = [
        ("radio.tx_power", r.tx_power),
        ("radio.noise_power", r.noise_power),
        ("radio.carrier_freq", r.carrier_freq),
        ("radio.bandwidth", r.bandwidth),
        ("radio.code_rate", r.code_rate),
        ("radio.antenna_gain", r.antenna_gain),
        ("radio.pathloss_exp", r.pathloss_exp),
    ];
    for (path, v) in positive {
        if !(v > 0.0) || !v.is_finite() {
            push(path.into(), format!("{v} must be positive and finite"));
        }
    }
    if !(r.reflection_amplitude > 0.0 && r.reflection_amplitude <= 1.0) {
        push("radio.reflection_amplitude".into(), "must lie in (0, 1]".into());
    }
    if r.pin_bits == 0 || r.pin_bits > 30 {
        push("radio.pin_bits".into(), "must lie in 1..=30".into());
    }
    if !(r.rician_factor >= 0.0) {
        push("radio.rician_factor".into(), "must be non-negative".into());
    }
    if !(r.shadow_sigma >= 0.0) || !r.shadow_sigma.is_finite() {
        push("radio.shadow_sigma".into(), "must be non-negative and finite".into());
    }
    if !(r.interference_sigma >= 0.0) || !r.interference_mu.is_finite() || !r.interference_sigma.is_finite() {
        push(
            "radio.interference".into(),
            "mu must be finite and sigma non-negative".into(),
        );
    }
    if let ShadowMean::Fixed(mu) = r.shadow_mu {
        if !mu.is_finite() {
            push("radio.shadow_mu".into(), "must be finite".into());
        }
    }
    if let PhaseShiftMode::Constant { rho } = s.phase_shift_mode {
        if r.pin_bits <= 30 && rho >= (1u32 << r.pin_bits) {
            push(
                "phase_shift_mode.rho".into(),
                format!("{rho} exceeds the {}-bit phase index range", r.pin_bits),
            );
        }
    }
    out
}

/// Circular deployment area in the XY plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, p: &Position3D) -> bool {
        let (dx, dy) = (p.x - self.center_x, p.y - self.center_y);
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

/// Draws `n` device positions uniformly inside `area` at `height`, with all
/// pairs at least `min_distance` apart. Uses rejection sampling with a cap
/// on attempts.
pub fn sample_device_positions<R: Rng + ?Sized>(
    area: &Disc,
    n: usize,
    height: f64,
    min_distance: f64,
    rng: &mut R,
) -> Result<Vec<Position3D>, Error> {
    const MAX_ATTEMPTS: usize = 100_000;
    let mut out: Vec<Position3D> = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(Error::Invalid(format!(
                "could not place {n} devices {min_distance} m apart inside a disc of radius {}",
                area.radius
            )));
        }
        let r = area.radius * rng.random::<f64>().sqrt();
        let a = 2.0 * PI * rng.random::<f64>();
        let p = Position3D::new(area.center_x + r * a.cos(), area.center_y + r * a.sin(), height);
        if out.iter().all(|q| q.distance(&p) >= min_distance) {
            out.push(p);
        }
    }
    Ok(out)
}
