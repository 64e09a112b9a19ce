//! `eval`: noise-free rollouts of a policy under one or more USV modes.

use rayon::prelude::*;
use serde::Serialize;
use usv_auv_core::mission::{EpisodeMetrics, MissionEnv, UsvMode};
use usv_auv_core::rl::Mlp;

use super::{eval_seed, load_actor, make_policy, rollout};
use crate::config::{PolicyKind, RunConfig};
use crate::error::{HarnessError, Result};
use crate::output::{self, MetricSummary, RunDir};

/// Metrics of every evaluation episode under one USV mode.
#[derive(Debug, Clone)]
pub struct ModeResult {
    pub mode: UsvMode,
    pub episodes: Vec<EpisodeMetrics>,
}

#[derive(Debug, Clone, Serialize)]
struct ModeReport {
    mode: String,
    summary: MetricSummary,
}

#[derive(Debug, Clone, Serialize)]
struct EvalReport {
    run_id: String,
    seed: u64,
    policy: PolicyKind,
    episodes_per_mode: usize,
    modes: Vec<ModeReport>,
}

/// Evaluate one seed. With `dir`, per-mode metrics, positioning-error traces,
/// step logs and a summary report are written there.
pub fn evaluate(cfg: &RunConfig, seed: u64, modes: &[UsvMode], actor: Option<&Mlp>, dir: Option<&RunDir>) -> Result<Vec<ModeResult>> {
    let mut results = Vec::with_capacity(modes.len());
    let mut jsonl = String::new();
    let mut pos = format!("{}\n", output::POS_ERROR_HEADER);
    for &mode in modes {
        let mut env = MissionEnv::new(cfg.setup(mode))?;
        let mut csv = format!("{}\n", output::METRICS_HEADER);
        let mut episodes = Vec::with_capacity(cfg.run.eval_episodes);
        for i in 0..cfg.run.eval_episodes {
            let es = eval_seed(seed, i);
            let mut policy = make_policy(cfg, cfg.run.policy, actor, es)?;
            let m = rollout(&mut env, policy.as_mut(), es)?;
            csv.push_str(&output::metrics_row(i, seed, &m));
            csv.push('\n');
            if dir.is_some() {
                output::append_jsonl(&mut jsonl, i, mode, env.log());
                output::append_pos_errors(&mut pos, mode, env.log());
            }
            episodes.push(m);
        }
        if let Some(d) = dir {
            d.write(&format!("metrics-{}.csv", output::mode_label(mode)), &csv)?;
        }
        results.push(ModeResult { mode, episodes });
    }
    if let Some(d) = dir {
        d.write("episodes.jsonl", &jsonl)?;
        d.write("pos_error.csv", &pos)?;
        d.write_json(
            "report.json",
            &EvalReport {
                run_id: d.id.clone(),
                seed,
                policy: cfg.run.policy,
                episodes_per_mode: cfg.run.eval_episodes,
                modes: results
                    .iter()
                    .map(|r| ModeReport {
                        mode: r.mode.to_string(),
                        summary: MetricSummary::of(&r.episodes),
                    })
                    .collect(),
            },
        )?;
    }
    Ok(results)
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    if cfg.run.eval_modes.is_empty() {
        return Err(HarnessError::Config("no USV modes to evaluate".into()));
    }
    let actor = match cfg.run.policy {
        PolicyKind::Actor => Some(load_actor(cfg)?),
        _ => None,
    };
    let per_seed: Vec<(RunDir, Vec<ModeResult>)> = cfg
        .run
        .seeds
        .par_iter()
        .map(|&seed| {
            let dir = RunDir::for_seed(cfg, "eval", seed)?;
            let res = evaluate(cfg, seed, &cfg.run.eval_modes, actor.as_ref(), Some(&dir));
            res.map(|r| (dir, r)).map_err(|e| HarnessError::Seeded {
                seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut pooled: Vec<Vec<EpisodeMetrics>> = vec![Vec::new(); cfg.run.eval_modes.len()];
    for (&seed, (dir, res)) in cfg.run.seeds.iter().zip(per_seed) {
        for (k, r) in res.into_iter().enumerate() {
            pooled[k].extend(r.episodes);
        }
        println!("seed {seed}: outputs in {}", dir.path.display());
    }
    println!("mode,sdr_mbps,ec_w,arpt,ssn,pos_err_mean_m,violations");
    for (mode, ms) in cfg.run.eval_modes.iter().zip(&pooled) {
        let s = MetricSummary::of(ms);
        println!(
            "{},{},{},{},{},{},{}",
            output::mode_label(*mode),
            s.sdr_mbps, s.ec_w, s.arpt, s.ssn, s.pos_err_mean_m, s.violations
        );
    }
    Ok(())
}
