//! Per-step episode records and the metrics folded from them.

use serde::{Deserialize, Serialize};

use super::reward::RewardTerms;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transfer {
    pub auv: usize,
    pub sn: usize,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuvStep {
    pub x: f64,
    pub y: f64,
    pub action: [f64; 2],
    pub speed: f64,
    pub heading: f64,
    pub border: bool,
    /// Realised path length this step, drift included (m).
    pub moved: f64,
    pub energy_w: f64,
    pub target: usize,
    pub reward: RewardTerms,
    /// USBL horizontal positioning error, when a fix was taken.
    pub pos_error: Option<f64>,
}

/// One JSON-lines record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub auvs: Vec<AuvStep>,
    pub usv: [f64; 2],
    pub waypoint: Option<[f64; 2]>,
    pub transfers: Vec<Transfer>,
    /// Sensor nodes whose buffers were fully drained this step.
    pub serviced: Vec<usize>,
    pub n_overflow: usize,
    /// AUV pairs closer than the collision distance.
    pub collisions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub sdr_mbps: f64,
    pub ec_w: f64,
    pub arpt: f64,
    pub ssn: usize,
    pub traj_lens: Vec<f64>,
    pub pos_err_mean_m: f64,
    pub violations: usize,
}

/// Fold a completed log; `dt` is the mission step in seconds.
///
/// The data rate divides delivered bits by the simulated duration. Energy and
/// reward are per-step sums over AUVs, averaged over steps.
pub fn collect_metrics(log: &[StepRecord], dt: f64) -> EpisodeMetrics {
    let n_auv = log.first().map_or(0, |r| r.auvs.len());
    if log.is_empty() {
        return EpisodeMetrics {
            sdr_mbps: 0.0,
            ec_w: 0.0,
            arpt: 0.0,
            ssn: 0,
            traj_lens: Vec::new(),
            pos_err_mean_m: 0.0,
            violations: 0,
        };
    }
    let bits: u64 = log.iter().flat_map(|r| &r.transfers).map(|t| t.bits).sum();
    let power: Vec<f64> = log.iter().map(|r| r.auvs.iter().map(|a| a.energy_w).sum()).collect();
    let rewards: Vec<f64> = log.iter().map(|r| r.auvs.iter().map(|a| a.reward.total).sum()).collect();
    let mut traj_lens = vec![0.0; n_auv];
    for r in log {
        for (len, a) in traj_lens.iter_mut().zip(&r.auvs) {
            *len += a.moved;
        }
    }
    let errors: Vec<f64> = log.iter().flat_map(|r| r.auvs.iter().filter_map(|a| a.pos_error)).collect();
    let violations = log
        .iter()
        .map(|r| r.collisions + r.auvs.iter().filter(|a| a.border).count())
        .sum();
    EpisodeMetrics {
        sdr_mbps: bits as f64 / (log.len() as f64 * dt) / 1e6,
        ec_w: stats::mean(&power),
        arpt: stats::mean(&rewards),
        ssn: log.iter().map(|r| r.serviced.len()).sum(),
        traj_lens,
        pos_err_mean_m: if errors.is_empty() { 0.0 } else { stats::mean(&errors) },
        violations,
    }
}
