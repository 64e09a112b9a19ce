//! Shaped per-AUV reward.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub w_dist: f64,
    pub w_overflow: f64,
    pub w_tl: f64,
    pub w_energy: f64,
    pub w_safety: f64,
    /// Inter-AUV distance below which the safety hinge is active (m).
    pub safety_radius: f64,
    pub w_border: f64,
    /// Multiplies the target-approach terms (distance, overflow, transmission).
    pub tracking_scale: f64,
    pub energy_scale: f64,
    /// Multiplies both the collision hinge and the border penalty.
    pub safety_scale: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_dist: 0.6,
            w_overflow: 0.05,
            w_tl: 12.0,
            w_energy: 0.085,
            w_safety: 6.0,
            safety_radius: 12.0,
            w_border: 0.1,
            tracking_scale: 1.0,
            energy_scale: 1.0,
            safety_scale: 1.0,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.w_dist,
            self.w_overflow,
            self.w_tl,
            self.w_energy,
            self.w_safety,
            self.safety_radius,
            self.w_border,
            self.tracking_scale,
            self.energy_scale,
            self.safety_scale,
        ];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Config("reward weights must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Inputs for one AUV at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardInputs<'a> {
    /// Horizontal distance to the assigned sensor node (m).
    pub d_target: f64,
    /// Number of overflowed, unserviced sensor nodes.
    pub n_overflow: usize,
    /// Target buffer drained this step.
    pub transmitted: bool,
    /// Power drawn this step (W).
    pub energy_w: f64,
    /// Distances to every other AUV (m).
    pub neighbour_dists: &'a [f64],
    pub border: bool,
}

/// The six reward terms, signed, and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardTerms {
    pub dist: f64,
    pub overflow: f64,
    pub tl: f64,
    pub energy: f64,
    pub safety: f64,
    pub border: f64,
    pub total: f64,
}

impl RewardTerms {
    /// Sum of the six terms in their canonical order.
    pub fn sum(&self) -> f64 {
        self.dist + self.overflow + self.tl + self.energy + self.safety + self.border
    }
}

pub fn reward(inp: &RewardInputs<'_>, w: &RewardWeights) -> RewardTerms {
    let hinge: f64 = inp
        .neighbour_dists
        .iter()
        .map(|&d| (w.safety_radius - d).max(0.0))
        .sum();
    let mut t = RewardTerms {
        dist: -w.tracking_scale * w.w_dist * inp.d_target,
        overflow: -w.tracking_scale * w.w_overflow * inp.n_overflow as f64,
        tl: if inp.transmitted { w.tracking_scale * w.w_tl } else { 0.0 },
        energy: -w.energy_scale * w.w_energy * inp.energy_w,
        safety: -w.safety_scale * w.w_safety * hinge,
        border: if inp.border { -w.safety_scale * w.w_border } else { 0.0 },
        total: 0.0,
    };
    t.total = t.sum();
    t
}
