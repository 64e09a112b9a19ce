//! Ultra-short-baseline acoustic positioning.
//!
//! The USV carries a two-axis hydrophone array. For AUV `k` it observes the
//! phase differences
//!
//! ```text
//! dphi_x = 2π f_k d (x_k − x) / (c S_k)      dphi_y = 2π f_k d (y_k − y) / (c S_k)
//! ```
//!
//! plus a two-way-travel-time slant range `S_k`. Knowing `S_k` the horizontal
//! offset follows by direct inversion.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UsblConfig {
    /// Carrier frequency per AUV index (Hz); AUV `k` uses `freqs[k % len]`.
    pub freqs: Vec<f64>,
    /// Hydrophone element spacing `d` (m).
    pub spacing_d: f64,
    pub sound_speed_c: f64,
    /// Phase noise standard deviation (rad).
    pub sigma_phase: f64,
    /// Slant-range noise standard deviation (m).
    pub sigma_range: f64,
    /// Sea-state coupling: phase noise is scaled by `1 + kappa · |wave velocity|`.
    pub kappa: f64,
}

impl Default for UsblConfig {
    fn default() -> Self {
        Self {
            freqs: vec![12_000.0, 14_000.0, 16_000.0, 18_000.0],
            spacing_d: 0.033,
            sound_speed_c: 1500.0,
            sigma_phase: 0.05,
            sigma_range: 0.3,
            kappa: 0.0,
        }
    }
}

impl UsblConfig {
    pub fn validate(&self) -> Result<()> {
        if self.freqs.is_empty() || self.freqs.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::Config("usbl.freqs must be non-empty and positive".into()));
        }
        if !(self.spacing_d > 0.0) || !(self.sound_speed_c > 0.0) {
            return Err(Error::Config("usbl.spacing_d and usbl.sound_speed_c must be positive".into()));
        }
        if !(self.sigma_phase >= 0.0) || !(self.sigma_range >= 0.0) || !(self.kappa >= 0.0) {
            return Err(Error::Config("usbl noise parameters must be non-negative".into()));
        }
        Ok(())
    }

    pub fn freq(&self, auv_id: usize) -> f64 {
        self.freqs[auv_id % self.freqs.len()]
    }

    /// `K_k = 2π f_k d / c`, the phase gain and the bound on `|dphi|`.
    pub fn phase_gain(&self, auv_id: usize) -> f64 {
        2.0 * PI * self.freq(auv_id) * self.spacing_d / self.sound_speed_c
    }

    /// Phase noise after sea-state scaling.
    pub fn phase_sigma(&self, local_wave_speed: f64) -> f64 {
        self.sigma_phase * (1.0 + self.kappa * local_wave_speed)
    }
}

/// Surface vessel pose; `eta` is its vertical displacement riding the waves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsvState {
    pub x: f64,
    pub y: f64,
    pub eta: f64,
}

/// True AUV position; `z` is depth below the mean surface, positive down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuvTruth {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsblMeasurement {
    pub dphi_x: f64,
    pub dphi_y: f64,
    pub slant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionEstimate {
    pub x_hat: f64,
    pub y_hat: f64,
    /// Horizontal error against the truth, when known.
    pub error: Option<f64>,
    /// `false` when a phase exceeded the geometric bound `2π f d / c`.
    pub consistent: bool,
}

/// Offsets and slant range with the wave-coupled vertical separation `z + eta`.
fn geometry(usv: &UsvState, auv: &AuvTruth) -> (f64, f64, f64) {
    let dx = auv.x - usv.x;
    let dy = auv.y - usv.y;
    let dz = auv.z + usv.eta;
    (dx, dy, (dx * dx + dy * dy + dz * dz).sqrt())
}

/// Noise-free `(dphi_x, dphi_y, slant)`.
pub fn true_phases(usv: &UsvState, auv: &AuvTruth, auv_id: usize, cfg: &UsblConfig) -> Result<(f64, f64, f64)> {
    let (dx, dy, s) = geometry(usv, auv);
    if !(s > 0.0) {
        return Err(Error::DegenerateGeometry { auv: auv_id });
    }
    let k = cfg.phase_gain(auv_id);
    Ok((k * dx / s, k * dy / s, s))
}

/// Noisy measurement with the configured noise levels.
pub fn measure<R: Rng + ?Sized>(
    usv: &UsvState,
    auv: &AuvTruth,
    auv_id: usize,
    cfg: &UsblConfig,
    rng: &mut R,
) -> Result<UsblMeasurement> {
    measure_in_sea(usv, auv, auv_id, cfg, 0.0, rng)
}

/// As [`measure`], with phase noise inflated by the local wave speed at the USV.
///
/// Three standard normals are always drawn, so the random stream does not
/// depend on the noise levels.
pub fn measure_in_sea<R: Rng + ?Sized>(
    usv: &UsvState,
    auv: &AuvTruth,
    auv_id: usize,
    cfg: &UsblConfig,
    local_wave_speed: f64,
    rng: &mut R,
) -> Result<UsblMeasurement> {
    let (px, py, s) = true_phases(usv, auv, auv_id, cfg)?;
    let sp = cfg.phase_sigma(local_wave_speed);
    let nx: f64 = rng.sample(StandardNormal);
    let ny: f64 = rng.sample(StandardNormal);
    let nr: f64 = rng.sample(StandardNormal);
    Ok(UsblMeasurement {
        dphi_x: px + sp * nx,
        dphi_y: py + sp * ny,
        slant: s + cfg.sigma_range * nr,
    })
}

/// Invert a measurement to a horizontal position estimate.
pub fn localize(meas: &UsblMeasurement, usv: &UsvState, auv_id: usize, cfg: &UsblConfig) -> Result<PositionEstimate> {
    if !(meas.slant > 0.0) {
        return Err(Error::DegenerateGeometry { auv: auv_id });
    }
    let k = cfg.phase_gain(auv_id);
    let scale = meas.slant / k;
    Ok(PositionEstimate {
        x_hat: usv.x + meas.dphi_x * scale,
        y_hat: usv.y + meas.dphi_y * scale,
        error: None,
        consistent: meas.dphi_x.abs() <= k && meas.dphi_y.abs() <= k,
    })
}

/// Horizontal Euclidean error.
pub fn positioning_error(est: &PositionEstimate, truth: &AuvTruth) -> f64 {
    (est.x_hat - truth.x).hypot(est.y_hat - truth.y)
}

/// Measure, invert and score one link in a single call.
pub fn fix<R: Rng + ?Sized>(
    usv: &UsvState,
    auv: &AuvTruth,
    auv_id: usize,
    cfg: &UsblConfig,
    local_wave_speed: f64,
    rng: &mut R,
) -> Result<PositionEstimate> {
    let meas = measure_in_sea(usv, auv, auv_id, cfg, local_wave_speed, rng)?;
    let mut est = localize(&meas, usv, auv_id, cfg)?;
    est.error = Some(positioning_error(&est, auv));
    Ok(est)
}
