use serde::{Deserialize, Serialize};

use super::de::{self, DeSettings};
use super::det_fim;
use crate::usbl::{AuvTruth, UsblConfig, UsvState};
use crate::{Error, Result};

/// Axis-aligned search box in mission coordinates (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn area(x_max: f64, y_max: f64) -> Self {
        Self {
            x_min: 0.0,
            x_max,
            y_min: 0.0,
            y_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// `None` searches the whole mission area.
    pub bounds: Option<Bounds>,
    pub pop_size: usize,
    /// Differential-evolution generations.
    pub nit: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub cr: f64,
    pub seed: u64,
    /// Minimum horizontal distance the USV keeps from every AUV.
    pub standoff_r_min: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            bounds: None,
            pop_size: 30,
            nit: 24,
            f_min: 0.5,
            f_max: 1.0,
            cr: 0.9,
            seed: 0,
            standoff_r_min: 0.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 8 {
            return Err(Error::Config(format!("planner.pop_size must be >= 8, got {}", self.pop_size)));
        }
        if self.nit < 1 {
            return Err(Error::Config("planner.nit must be >= 1".into()));
        }
        if !(self.standoff_r_min >= 0.0) {
            return Err(Error::Config("planner.standoff_r_min must be >= 0".into()));
        }
        self.de_settings(self.seed).validate()
    }

    pub fn de_settings(&self, seed: u64) -> DeSettings {
        DeSettings {
            pop_size: self.pop_size,
            generations: self.nit,
            f_min: self.f_min,
            f_max: self.f_max,
            cr: self.cr,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub det: f64,
    /// Single-AUV plans collapse onto the AUV and carry no diversity.
    pub degenerate: bool,
    /// Best determinant after initialisation and after each generation.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Objective seen by the optimiser: the determinant at the mean surface, or a
/// negative standoff violation when the USV is too close to some AUV.
fn objective(x: f64, y: f64, auvs: &[AuvTruth], cfg: &UsblConfig, r_min: f64) -> f64 {
    if r_min > 0.0 {
        let violation: f64 = auvs
            .iter()
            .map(|a| (r_min - (a.x - x).hypot(a.y - y)).max(0.0))
            .sum();
        if violation > 0.0 {
            return -violation;
        }
    }
    det_fim(&UsvState { x, y, eta: 0.0 }, auvs, cfg).unwrap_or(f64::NEG_INFINITY)
}

/// USV waypoint maximising the FIM determinant inside `bounds`.
pub fn plan_waypoint(auvs: &[AuvTruth], cfg: &UsblConfig, plan: &PlannerConfig, bounds: Bounds) -> Result<Waypoint> {
    plan_waypoint_seeded(auvs, cfg, plan, bounds, plan.seed)
}

/// As [`plan_waypoint`] with the optimiser seed given explicitly.
pub fn plan_waypoint_seeded(
    auvs: &[AuvTruth],
    cfg: &UsblConfig,
    plan: &PlannerConfig,
    bounds: Bounds,
    seed: u64,
) -> Result<Waypoint> {
    if auvs.is_empty() {
        return Err(Error::Config("cannot plan a waypoint without AUVs".into()));
    }
    plan.validate()?;
    let b = plan.bounds.unwrap_or(bounds);
    let r = de::maximize(
        |p| objective(p[0], p[1], auvs, cfg, plan.standoff_r_min),
        &[(b.x_min, b.x_max), (b.y_min, b.y_max)],
        &plan.de_settings(seed),
    )?;
    Ok(Waypoint {
        x: r.best[0],
        y: r.best[1],
        det: r.value,
        degenerate: auvs.len() < 2,
        history: r.history,
    })
}

/// Exhaustive lattice search with spacing `step`, used to audit the planner.
pub fn grid_oracle(auvs: &[AuvTruth], cfg: &UsblConfig, bounds: Bounds, step: f64, r_min: f64) -> Result<Waypoint> {
    if auvs.is_empty() || !(step > 0.0) {
        return Err(Error::Config("grid oracle needs AUVs and a positive step".into()));
    }
    let nx = ((bounds.x_max - bounds.x_min) / step + 1e-9).floor() as usize;
    let ny = ((bounds.y_max - bounds.y_min) / step + 1e-9).floor() as usize;
    let mut best = (bounds.x_min, bounds.y_min, f64::NEG_INFINITY);
    for j in 0..=ny {
        let y = bounds.y_min + j as f64 * step;
        for i in 0..=nx {
            let x = bounds.x_min + i as f64 * step;
            let v = objective(x, y, auvs, cfg, r_min);
            if v > best.2 {
                best = (x, y, v);
            }
        }
    }
    Ok(Waypoint {
        x: best.0,
        y: best.1,
        det: best.2,
        degenerate: auvs.len() < 2,
        history: Vec::new(),
    })
}
