//! `plan`: one FIM-optimal USV waypoint for given AUV positions.

use std::time::Instant;

use serde::Serialize;
use usv_auv_core::fim::{grid_oracle, plan_waypoint, Waypoint};
use usv_auv_core::usbl::AuvTruth;

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::output::RunDir;

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub step_m: f64,
    pub x: f64,
    pub y: f64,
    pub det: f64,
    /// Planner determinant over the lattice maximum.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub auvs: Vec<[f64; 2]>,
    pub depth: f64,
    pub nit: usize,
    pub pop_size: usize,
    pub seed: u64,
    pub x: f64,
    pub y: f64,
    pub det: f64,
    /// Mean wall-clock time of one optimisation over `repeat` runs.
    pub runtime_ms: f64,
    pub repeat: usize,
    pub oracle: Option<OracleReport>,
}

pub fn plan(cfg: &RunConfig) -> Result<PlanReport> {
    if cfg.plan.auvs.is_empty() {
        return Err(HarnessError::Config("plan needs at least one AUV position".into()));
    }
    let depth = cfg.mission.depth;
    let auvs: Vec<AuvTruth> = cfg.plan.auvs.iter().map(|p| AuvTruth { x: p[0], y: p[1], z: depth }).collect();
    let bounds = cfg.mission.bounds();
    let started = Instant::now();
    let mut wp: Option<Waypoint> = None;
    for _ in 0..cfg.plan.repeat {
        wp = Some(plan_waypoint(&auvs, &cfg.usbl, &cfg.planner, bounds)?);
    }
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3 / cfg.plan.repeat as f64;
    let wp = wp.expect("repeat is positive");
    let oracle = if cfg.plan.oracle_grid > 0.0 {
        let g = grid_oracle(&auvs, &cfg.usbl, cfg.planner.bounds.unwrap_or(bounds), cfg.plan.oracle_grid, cfg.planner.standoff_r_min)?;
        Some(OracleReport {
            step_m: cfg.plan.oracle_grid,
            x: g.x,
            y: g.y,
            det: g.det,
            ratio: wp.det / g.det,
        })
    } else {
        None
    };
    Ok(PlanReport {
        auvs: cfg.plan.auvs.clone(),
        depth,
        nit: cfg.planner.nit,
        pop_size: cfg.planner.pop_size,
        seed: cfg.planner.seed,
        x: wp.x,
        y: wp.y,
        det: wp.det,
        runtime_ms,
        repeat: cfg.plan.repeat,
        oracle,
    })
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let report = plan(cfg)?;
    let dir = RunDir::for_all(cfg, "plan")?;
    let mut csv = String::from("x,y,det,oracle_x,oracle_y,oracle_det,ratio\n");
    match &report.oracle {
        Some(o) => csv.push_str(&format!("{},{},{},{},{},{},{}\n", report.x, report.y, report.det, o.x, o.y, o.det, o.ratio)),
        None => csv.push_str(&format!("{},{},{},,,,\n", report.x, report.y, report.det)),
    }
    dir.write("plan.csv", &csv)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("plan report serialises"));
    Ok(())
}
