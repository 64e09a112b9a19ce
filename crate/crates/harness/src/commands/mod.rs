//! One module per subcommand, plus the rollout plumbing they share.

pub mod eval;
pub mod plan;
pub mod sea;
pub mod sweep;
pub mod train;

use usv_auv_core::mission::{EpisodeMetrics, GreedyTarget, Lawnmower, MissionEnv, Policy, RandomPolicy};
use usv_auv_core::rl::{ActorPolicy, Checkpoint, Mlp, Td3Agent};
use usv_auv_core::rng;

use crate::config::{PolicyKind, RunConfig};
use crate::error::{HarnessError, Result};

const EVAL_LABEL: u64 = 0xE7A1;

/// Seed of evaluation episode `i`; disjoint from the training episode seeds.
pub fn eval_seed(seed: u64, i: usize) -> u64 {
    rng::mix(rng::mix(seed, EVAL_LABEL), i as u64)
}

/// Play one full episode.
pub fn rollout(env: &mut MissionEnv, policy: &mut dyn Policy, seed: u64) -> Result<EpisodeMetrics> {
    let mut states = env.reset(seed)?;
    policy.reset(env);
    loop {
        let actions = policy.act(env, &states);
        let out = env.step(&actions)?;
        states = out.states;
        if out.done {
            return Ok(env.metrics());
        }
    }
}

/// Policy for an evaluation episode seeded with `episode_seed`.
pub fn make_policy(cfg: &RunConfig, kind: PolicyKind, actor: Option<&Mlp>, episode_seed: u64) -> Result<Box<dyn Policy>> {
    Ok(match kind {
        PolicyKind::Actor => {
            let actor = actor.ok_or_else(|| HarnessError::Config("policy `actor` needs a checkpoint".into()))?;
            Box::new(ActorPolicy { actor: actor.clone() })
        }
        PolicyKind::Random => Box::new(RandomPolicy::new(episode_seed)),
        PolicyKind::Greedy => Box::new(GreedyTarget),
        PolicyKind::Lawnmower => Box::new(Lawnmower::new(
            cfg.run.lawnmower_spacing,
            cfg.run.lawnmower_margin,
            cfg.run.lawnmower_speed,
        )),
    })
}

/// Actor from `run.checkpoint`, checked against this configuration's widths.
pub fn load_actor(cfg: &RunConfig) -> Result<Mlp> {
    let path = cfg
        .run
        .checkpoint
        .as_ref()
        .ok_or_else(|| HarnessError::Config("policy `actor` needs --checkpoint or run.checkpoint".into()))?;
    let ck = Checkpoint::load(path)?;
    let mut agent = Td3Agent::new(cfg.mission.state_dim(), 2, cfg.td3.clone(), ck.seed)?;
    ck.apply(&mut agent)?;
    if ck.hyper_hash != cfg.td3.hash() {
        eprintln!("warning: {} was trained with different TD3 hyperparameters", path.display());
    }
    Ok(agent.actor)
}
