//! Training loop, the environment contract it drives, and the convergence rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::Mlp;
use super::replay::ReplayBuffer;
use super::td3::{select_action, Td3Agent, Td3Hyper};
use crate::mission::{MissionEnv, Policy};
use crate::rng;
use crate::{Error, Result};

/// Observation and reward for every agent after one joint step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub states: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub done: bool,
}

/// Per-episode scores reported on the training curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeScores {
    pub arpt: f64,
    pub sdr_mbps: f64,
    pub ec_w: f64,
    pub ssn: f64,
}

/// Multi-agent environment with a shared observation and action layout.
pub trait Environment {
    fn n_agents(&self) -> usize;
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Vec<Vec<f64>>>;
    fn step(&mut self, actions: &[Vec<f64>]) -> Result<EnvStep>;
    /// Scores of the episode played since the last reset.
    fn scores(&self) -> EpisodeScores;
}

impl Environment for MissionEnv {
    fn n_agents(&self) -> usize {
        self.n_auv()
    }

    fn state_dim(&self) -> usize {
        MissionEnv::state_dim(self)
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<Vec<f64>>> {
        MissionEnv::reset(self, seed)
    }

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<EnvStep> {
        let mut joint = Vec::with_capacity(actions.len());
        for a in actions {
            if a.len() != 2 {
                return Err(Error::Dimension { expected: 2, got: a.len() });
            }
            joint.push([a[0], a[1]]);
        }
        let out = MissionEnv::step(self, &joint)?;
        Ok(EnvStep {
            states: out.states,
            rewards: out.rewards,
            done: out.done,
        })
    }

    fn scores(&self) -> EpisodeScores {
        let m = self.metrics();
        EpisodeScores {
            arpt: m.arpt,
            sdr_mbps: m.sdr_mbps,
            ec_w: m.ec_w,
            ssn: m.ssn as f64,
        }
    }
}

/// Deterministic actor shared by all AUVs.
#[derive(Debug, Clone)]
pub struct ActorPolicy {
    pub actor: Mlp,
}

impl Policy for ActorPolicy {
    fn act(&mut self, _env: &MissionEnv, states: &[Vec<f64>]) -> Vec<[f64; 2]> {
        states
            .iter()
            .map(|s| {
                let a = self.actor.forward_one(s).expect("state width matches the actor");
                [a[0], a[1]]
            })
            .collect()
    }
}

/// Moving-average plateau detector over several metric series.
///
/// The slope of a series at episode `t` is `MA_t − MA_{t−1}` where `MA` is the
/// trailing mean over `window` episodes. The detector fires once every tracked
/// series has had `|slope| < threshold` for `patience` consecutive episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceDetector {
    pub window: usize,
    pub threshold: f64,
    pub patience: usize,
    series: Vec<Vec<f64>>,
    streak: usize,
    fired_at: Option<usize>,
    last_slopes: Vec<f64>,
}

impl Default for ConvergenceDetector {
    fn default() -> Self {
        Self::new(25, 0.2, 50)
    }
}

impl ConvergenceDetector {
    pub fn new(window: usize, threshold: f64, patience: usize) -> Self {
        assert!(window > 0 && patience > 0);
        Self {
            window,
            threshold,
            patience,
            series: Vec::new(),
            streak: 0,
            fired_at: None,
            last_slopes: Vec::new(),
        }
    }

    fn moving_average(&self, k: usize, end: usize) -> f64 {
        let xs = &self.series[k][end - self.window..end];
        xs.iter().sum::<f64>() / self.window as f64
    }

    /// Record one episode; returns whether the detector has fired so far.
    pub fn push(&mut self, values: &[f64]) -> bool {
        if self.series.is_empty() {
            self.series = vec![Vec::new(); values.len()];
        }
        assert_eq!(values.len(), self.series.len(), "tracked metric count changed");
        for (s, &v) in self.series.iter_mut().zip(values) {
            s.push(v);
        }
        let n = self.series[0].len();
        if n > self.window {
            self.last_slopes = (0..self.series.len())
                .map(|k| self.moving_average(k, n) - self.moving_average(k, n - 1))
                .collect();
            if self.last_slopes.iter().all(|s| s.abs() < self.threshold) {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
            if self.streak >= self.patience && self.fired_at.is_none() {
                self.fired_at = Some(n - 1);
            }
        }
        self.fired_at.is_some()
    }

    pub fn fired(&self) -> bool {
        self.fired_at.is_some()
    }

    /// Episode index (0-based) at which the rule was first met.
    pub fn fired_at(&self) -> Option<usize> {
        self.fired_at
    }

    pub fn streak(&self) -> usize {
        self.streak
    }

    pub fn last_slopes(&self) -> &[f64] {
        &self.last_slopes
    }

    /// Trailing moving average of series `k`, if enough episodes exist.
    pub fn current_average(&self, k: usize) -> Option<f64> {
        let n = self.series.get(k)?.len();
        (n >= self.window).then(|| self.moving_average(k, n))
    }
}

/// One row of the training curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    pub arpt: f64,
    pub sdr_mbps: f64,
    pub ec_w: f64,
    pub ssn: f64,
}

impl CurveRow {
    pub const CSV_HEADER: &'static str = "episode,arpt,sdr_mbps,ec_w,ssn";

    pub fn csv(&self) -> String {
        format!("{},{},{},{},{}", self.episode, self.arpt, self.sdr_mbps, self.ec_w, self.ssn)
    }
}

/// Passed to the per-episode callback.
#[derive(Debug, Clone)]
pub struct EpisodeReport {
    pub row: CurveRow,
    pub arpt_ma: Option<f64>,
    pub converged: bool,
    pub env_steps: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agent: Td3Agent,
    pub curves: Vec<CurveRow>,
    pub detector: ConvergenceDetector,
    pub env_steps: u64,
    pub max_replay_len: usize,
}

/// Seed of episode `ep` in a run seeded with `seed`.
pub fn episode_seed(seed: u64, ep: usize) -> u64 {
    rng::mix(seed, ep as u64)
}

/// Train one shared policy on `env`.
///
/// Every agent's transition enters the replay buffer; the learner ticks once
/// per environment step after warmup. Episodes are truncated at
/// `hyper.steps_per_episode`, which is the only place `done` is set unless
/// the environment ends earlier.
pub fn train<E, F>(env: &mut E, hyper: &Td3Hyper, seed: u64, mut on_episode: F) -> Result<TrainOutcome>
where
    E: Environment,
    F: FnMut(&EpisodeReport, &E) -> Result<()>,
{
    hyper.validate()?;
    let m = env.n_agents();
    let (sd, ad) = (env.state_dim(), env.action_dim());
    let mut agent = Td3Agent::new(sd, ad, hyper.clone(), seed)?;
    let mut replay = ReplayBuffer::new(hyper.replay_capacity, sd, ad);
    let mut explore = rng::stream(seed, 12);
    let mut detector = ConvergenceDetector::default();
    let mut curves = Vec::with_capacity(hyper.episodes);
    let mut env_steps = 0u64;
    let mut max_replay_len = 0;

    for ep in 0..hyper.episodes {
        let ctx = |t: usize, e: Error| match e {
            Error::Training(msg) => Error::Training(format!("episode {ep}, step {t}: {msg}")),
            other => other,
        };
        let mut states = env.reset(episode_seed(seed, ep))?;
        for t in 0..hyper.steps_per_episode {
            let actions: Vec<Vec<f64>> = if (env_steps as usize) < hyper.warmup_steps {
                (0..m)
                    .map(|_| (0..ad).map(|_| explore.random_range(-1.0..=1.0)).collect())
                    .collect()
            } else {
                states
                    .iter()
                    .map(|s| select_action(&agent.actor, s, &mut explore, hyper.explore_sigma))
                    .collect::<Result<_>>()
                    .map_err(|e| ctx(t, e))?
            };
            let out = env.step(&actions)?;
            let done = out.done || t + 1 == hyper.steps_per_episode;
            for k in 0..m {
                replay.push(&states[k], &actions[k], out.rewards[k], &out.states[k], done)?;
            }
            max_replay_len = max_replay_len.max(replay.len());
            env_steps += 1;
            if env_steps as usize >= hyper.warmup_steps && replay.len() >= hyper.batch {
                agent.update(&replay).map_err(|e| ctx(t, e))?;
            }
            states = out.states;
            if done {
                break;
            }
        }
        let s = env.scores();
        let row = CurveRow {
            episode: ep,
            arpt: s.arpt,
            sdr_mbps: s.sdr_mbps,
            ec_w: s.ec_w,
            ssn: s.ssn,
        };
        let converged = detector.push(&[s.arpt, s.sdr_mbps, s.ec_w, s.ssn]);
        curves.push(row);
        on_episode(&EpisodeReport {
            row,
            arpt_ma: detector.current_average(0),
            converged,
            env_steps,
        }, env)?;
    }
    Ok(TrainOutcome {
        agent,
        curves,
        detector,
        env_steps,
        max_replay_len,
    })
}
