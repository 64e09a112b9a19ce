//! `sweep`: one configuration key over a list of values, every point run for
//! every seed, with rank-correlation trend statistics.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use usv_auv_core::mission::EpisodeMetrics;
use usv_auv_core::stats;

use super::{eval, load_actor, train};
use crate::config::{PolicyKind, RunConfig, SweepRun};
use crate::error::{HarnessError, Result};
use crate::output::{MetricSummary, RunDir};

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub value: f64,
    pub summary: MetricSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trends {
    pub sdr_mbps: f64,
    pub ec_w: f64,
    pub arpt: f64,
    pub ssn: f64,
    pub pos_err_mean_m: f64,
    pub violations: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub key: String,
    pub run: SweepRun,
    pub seeds: usize,
    pub points: Vec<PointReport>,
    /// Spearman correlation of each per-point mean with the swept value.
    pub spearman: Trends,
}

pub const POINTS_HEADER: &str = "point,value,seed,episode,sdr_mbps,ec_w,arpt,ssn,pos_err_mean_m,violations";

/// Episodes of one point and seed, evaluated under `run.usv_mode`.
fn point_episodes(cfg: &RunConfig, seed: u64, how: SweepRun) -> Result<Vec<EpisodeMetrics>> {
    let actor = match how {
        SweepRun::Train => Some(train::train_seed(cfg, seed, false)?.1.agent.actor),
        SweepRun::Eval if cfg.run.policy == PolicyKind::Actor => Some(load_actor(cfg)?),
        SweepRun::Eval => None,
    };
    let mut eval_cfg = cfg.clone();
    if how == SweepRun::Train {
        eval_cfg.run.policy = PolicyKind::Actor;
    }
    let res = eval::evaluate(&eval_cfg, seed, &[cfg.run.usv_mode], actor.as_ref(), None)?;
    Ok(res.into_iter().next().map(|r| r.episodes).unwrap_or_default())
}

pub fn sweep(cfg: &RunConfig) -> Result<(RunDir, SweepReport)> {
    let s = &cfg.sweep;
    if s.key.is_empty() || s.values.is_empty() {
        return Err(HarnessError::Config("sweep needs a key and at least one value (--sweep key=v1,v2)".into()));
    }
    let dir = RunDir::for_all(cfg, "sweep")?;
    let mut csv = format!("{POINTS_HEADER}\n");
    let jobs: Vec<(usize, f64, u64)> = s
        .values
        .iter()
        .enumerate()
        .flat_map(|(p, &v)| cfg.run.seeds.iter().map(move |&seed| (p, v, seed)))
        .collect();
    // One run per worker; results come back in (point, seed) order.
    let runs: Vec<Vec<EpisodeMetrics>> = jobs
        .par_iter()
        .map(|&(_, value, seed)| {
            cfg.with_override(&s.key, value)
                .and_then(|point_cfg| point_episodes(&point_cfg, seed, s.run))
                .map_err(|e| HarnessError::Seeded {
                    seed,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let mut pooled: Vec<Vec<EpisodeMetrics>> = vec![Vec::new(); s.values.len()];
    for (&(p, value, seed), eps) in jobs.iter().zip(runs) {
        for (i, m) in eps.iter().enumerate() {
            writeln!(
                csv,
                "{p},{value},{seed},{i},{},{},{},{},{},{}",
                m.sdr_mbps, m.ec_w, m.arpt, m.ssn, m.pos_err_mean_m, m.violations
            )
            .unwrap();
        }
        pooled[p].extend(eps);
    }
    let points: Vec<PointReport> = s
        .values
        .iter()
        .zip(&pooled)
        .map(|(&value, eps)| PointReport {
            value,
            summary: MetricSummary::of(eps),
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p.value).collect();
    let rho = |f: &dyn Fn(&MetricSummary) -> f64| stats::spearman(&xs, &points.iter().map(|p| f(&p.summary)).collect::<Vec<_>>());
    let report = SweepReport {
        key: s.key.clone(),
        run: s.run,
        seeds: cfg.run.seeds.len(),
        spearman: Trends {
            sdr_mbps: rho(&|m| m.sdr_mbps.mean),
            ec_w: rho(&|m| m.ec_w.mean),
            arpt: rho(&|m| m.arpt.mean),
            ssn: rho(&|m| m.ssn.mean),
            pos_err_mean_m: rho(&|m| m.pos_err_mean_m.mean),
            violations: rho(&|m| m.violations.mean),
        },
        points,
    };
    dir.write("points.csv", &csv)?;
    dir.write_json("report.json", &report)?;
    Ok((dir, report))
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let (dir, r) = sweep(cfg)?;
    println!("value,sdr_mbps,ec_w,arpt,ssn,pos_err_mean_m,violations");
    for p in &r.points {
        let s = &p.summary;
        println!(
            "{},{},{},{},{},{},{}",
            p.value, s.sdr_mbps, s.ec_w, s.arpt, s.ssn, s.pos_err_mean_m, s.violations
        );
    }
    let t = &r.spearman;
    println!(
        "spearman vs {}: sdr {:.3} ec {:.3} arpt {:.3} ssn {:.3} pos_err {:.3} violations {:.3}",
        r.key, t.sdr_mbps, t.ec_w, t.arpt, t.ssn, t.pos_err_mean_m, t.violations
    );
    println!("outputs in {}", dir.path.display());
    Ok(())
}
