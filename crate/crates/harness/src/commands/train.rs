//! `train`: one TD3 run per seed.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use usv_auv_core::mission::MissionEnv;
use usv_auv_core::rl::{self, Checkpoint, CurveRow, Diagnostics, TrainOutcome, UpdateCounters};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::output::{self, RunDir};

#[derive(Debug, Clone, Serialize)]
pub struct Convergence {
    pub window: usize,
    pub threshold: f64,
    pub patience: usize,
    pub tracked: [&'static str; 4],
    pub fired: bool,
    pub fired_at_episode: Option<usize>,
    pub final_streak: usize,
    pub final_slopes: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub run_id: String,
    pub seed: u64,
    pub episodes: usize,
    pub env_steps: u64,
    pub counters: UpdateCounters,
    pub diagnostics: Diagnostics,
    pub max_replay_len: usize,
    pub convergence: Convergence,
    pub final_ma25: Option<CurveRow>,
    pub runtime_s: f64,
}

/// Train with `seed`, writing the run directory. Progress goes to stdout when
/// `progress` is set.
pub fn train_seed(cfg: &RunConfig, seed: u64, progress: bool) -> Result<(RunDir, TrainOutcome, TrainReport)> {
    let dir = RunDir::for_seed(cfg, "train", seed)?;
    let started = Instant::now();
    let mut env = MissionEnv::new(cfg.setup(cfg.run.usv_mode))?;
    let mut metrics = format!("{}\n", output::METRICS_HEADER);
    let outcome = rl::train(&mut env, &cfg.td3, seed, |rep, env| {
        metrics.push_str(&output::metrics_row(rep.row.episode, seed, &env.metrics()));
        metrics.push('\n');
        if progress {
            let ma = rep.arpt_ma.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
            println!("seed {seed} episode {} arpt_ma25 {ma} converged {}", rep.row.episode, rep.converged);
        }
        Ok(())
    })?;

    let mut curves = format!("{}\n", CurveRow::CSV_HEADER);
    for row in &outcome.curves {
        curves.push_str(&row.csv());
        curves.push('\n');
    }
    dir.write("curves.csv", &curves)?;
    dir.write("metrics.csv", &metrics)?;
    let mut jsonl = String::new();
    output::append_jsonl(&mut jsonl, outcome.curves.len() - 1, cfg.run.usv_mode, env.log());
    dir.write("episodes.jsonl", &jsonl)?;
    Checkpoint::from_agent(&outcome.agent).save(&dir.file("checkpoint.bin"))?;

    let d = &outcome.detector;
    let final_ma25 = (0..4)
        .map(|k| d.current_average(k))
        .collect::<Option<Vec<f64>>>()
        .map(|v| CurveRow {
            episode: outcome.curves.len() - 1,
            arpt: v[0],
            sdr_mbps: v[1],
            ec_w: v[2],
            ssn: v[3],
        });
    let report = TrainReport {
        run_id: dir.id.clone(),
        seed,
        episodes: outcome.curves.len(),
        env_steps: outcome.env_steps,
        counters: outcome.agent.counters,
        diagnostics: outcome.agent.diagnostics,
        max_replay_len: outcome.max_replay_len,
        convergence: Convergence {
            window: d.window,
            threshold: d.threshold,
            patience: d.patience,
            tracked: ["arpt", "sdr_mbps", "ec_w", "ssn"],
            fired: d.fired(),
            fired_at_episode: d.fired_at(),
            final_streak: d.streak(),
            final_slopes: d.last_slopes().to_vec(),
        },
        final_ma25,
        runtime_s: started.elapsed().as_secs_f64(),
    };
    dir.write_json("report.json", &report)?;
    Ok((dir, outcome, report))
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let reports: Vec<(RunDir, TrainReport)> = cfg
        .run
        .seeds
        .par_iter()
        .map(|&seed| {
            train_seed(cfg, seed, true)
                .map(|(dir, _, report)| (dir, report))
                .map_err(|e| HarnessError::Seeded {
                    seed,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    for (dir, report) in reports {
        println!(
            "seed {}: {} episodes, converged {} (episode {:?}), outputs in {}",
            report.seed,
            report.episodes,
            report.convergence.fired,
            report.convergence.fired_at_episode,
            dir.path.display()
        );
    }
    Ok(())
}
