//! Twin-delayed deep deterministic policy gradient.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::net::{Mlp, OutputActivation};
use super::optim::{Optimizer, OptimizerKind};
use super::replay::{Batch, ReplayBuffer};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Td3Hyper {
    pub gamma: f64,
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch: usize,
    pub policy_delay: usize,
    pub target_noise_sigma: f64,
    /// Clip on the target-policy smoothing noise (not the sound speed).
    pub target_noise_clip: f64,
    pub explore_sigma: f64,
    /// Environment steps with uniform random actions before learning starts.
    pub warmup_steps: usize,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub replay_capacity: usize,
    pub hidden: usize,
    pub optimizer: OptimizerKind,
    /// Rewards are multiplied by this before entering the Bellman target.
    pub reward_scale: f64,
}

impl Default for Td3Hyper {
    fn default() -> Self {
        Self {
            gamma: 0.97,
            tau: 1e-3,
            lr_actor: 1e-3,
            lr_critic: 1e-3,
            batch: 64,
            policy_delay: 2,
            target_noise_sigma: 0.1,
            target_noise_clip: 1.0,
            explore_sigma: 0.1,
            warmup_steps: 1000,
            episodes: 450,
            steps_per_episode: 1000,
            replay_capacity: 20_000,
            hidden: 128,
            optimizer: OptimizerKind::Sgd,
            reward_scale: 1.0,
        }
    }
}

impl Td3Hyper {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("td3.gamma must lie in [0, 1), got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("td3.tau must lie in (0, 1], got {}", self.tau));
        }
        if self.policy_delay < 1 {
            return bad("td3.policy_delay must be >= 1".into());
        }
        if !(self.lr_actor > 0.0) || !(self.lr_critic > 0.0) {
            return bad("td3 learning rates must be positive".into());
        }
        if !(self.target_noise_sigma >= 0.0) || !(self.target_noise_clip >= 0.0) || !(self.explore_sigma >= 0.0) {
            return bad("td3 noise parameters must be >= 0".into());
        }
        if self.batch == 0 || self.replay_capacity < self.batch {
            return bad("td3.batch must be positive and no larger than td3.replay_capacity".into());
        }
        if self.hidden == 0 || self.episodes == 0 || self.steps_per_episode == 0 {
            return bad("td3.hidden, episodes and steps_per_episode must be positive".into());
        }
        if !(self.reward_scale > 0.0) || !self.reward_scale.is_finite() {
            return bad("td3.reward_scale must be positive".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding; stamped into checkpoints.
    pub fn hash(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("hyperparameters serialise");
        Sha256::digest(&json).into()
    }
}

/// Policy output plus Gaussian exploration noise, clamped to the action box.
pub fn select_action<R: Rng + ?Sized>(actor: &Mlp, s: &[f64], rng: &mut R, explore_sigma: f64) -> Result<Vec<f64>> {
    let mut a = actor.forward_one(s)?;
    if explore_sigma > 0.0 {
        for v in &mut a {
            let n: f64 = rng.sample(StandardNormal);
            *v = (*v + explore_sigma * n).clamp(-1.0, 1.0);
        }
    }
    Ok(a)
}

/// Smoothed target action from explicit raw noise `eps`. Returns the action
/// and the clipped perturbation that was added.
pub fn target_action_with_noise(actor_t: &Mlp, s_next: ArrayView2<f64>, eps: &Array2<f64>, clip: f64) -> Result<(Array2<f64>, Array2<f64>)> {
    let mut a = actor_t.forward(s_next)?;
    let pert = eps.mapv(|e| e.clamp(-clip, clip));
    a += &pert;
    a.mapv_inplace(|v| v.clamp(-1.0, 1.0));
    Ok((a, pert))
}

/// Smoothed target action with `eps ~ N(0, target_noise_sigma)`.
pub fn target_action<R: Rng + ?Sized>(actor_t: &Mlp, s_next: ArrayView2<f64>, rng: &mut R, hyper: &Td3Hyper) -> Result<(Array2<f64>, Array2<f64>)> {
    let sigma = hyper.target_noise_sigma;
    let eps = Array2::from_shape_simple_fn((s_next.nrows(), actor_t.output_dim()), || {
        let n: f64 = rng.sample(StandardNormal);
        sigma * n
    });
    target_action_with_noise(actor_t, s_next, &eps, hyper.target_noise_clip)
}

/// Clipped double-Q Bellman target.
pub fn bellman_target(r: f64, done: bool, q1: f64, q2: f64, gamma: f64) -> f64 {
    if done {
        r
    } else {
        r + gamma * q1.min(q2)
    }
}

fn sa(s: ArrayView2<f64>, a: ArrayView2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[s, a]).expect("state and action batches have equal rows")
}

/// Gradients of the mean squared TD error `mean (Q(s, a) - y)²`, and the loss.
pub fn critic_gradient(critic: &Mlp, s: ArrayView2<f64>, a: ArrayView2<f64>, y: &Array1<f64>) -> Result<(super::net::Grads, f64)> {
    let x = sa(s, a);
    let cache = critic.forward_cached(x.view())?;
    let err = &cache.output().column(0) - y;
    let n = y.len() as f64;
    let loss = err.mapv(|e| e * e).sum() / n;
    let d_out = (err * (2.0 / n)).insert_axis(Axis(1));
    let (g, _) = critic.backward(&cache, &d_out);
    Ok((g, loss))
}

/// One descent step on the mean squared TD error; returns the loss before the step.
pub fn critic_step(critic: &mut Mlp, opt: &mut Optimizer, s: ArrayView2<f64>, a: ArrayView2<f64>, y: &Array1<f64>) -> Result<f64> {
    let (g, loss) = critic_gradient(critic, s, a, y)?;
    if !loss.is_finite() {
        return Err(Error::Training(format!("non-finite critic loss {loss}")));
    }
    opt.step(critic, &g);
    Ok(loss)
}

/// Gradients of `mean Q(s, π(s))` with respect to the actor parameters, and the objective.
pub fn actor_gradient(actor: &Mlp, critic: &Mlp, s: ArrayView2<f64>) -> Result<(super::net::Grads, f64)> {
    let a_cache = actor.forward_cached(s)?;
    let x = sa(s, a_cache.output().view());
    let c_cache = critic.forward_cached(x.view())?;
    let n = s.nrows() as f64;
    let objective = c_cache.output().sum() / n;
    let (_, dx) = critic.backward(&c_cache, &Array2::from_elem((s.nrows(), 1), 1.0 / n));
    let da = dx.slice(s![.., s.ncols()..]).to_owned();
    let (g, _) = actor.backward(&a_cache, &da);
    Ok((g, objective))
}

/// One ascent step on `mean Q1(s, π(s))`; returns the objective before the step.
pub fn actor_step(actor: &mut Mlp, opt: &mut Optimizer, critic: &Mlp, s: ArrayView2<f64>) -> Result<f64> {
    let (mut g, objective) = actor_gradient(actor, critic, s)?;
    if !g.is_finite() || !objective.is_finite() {
        return Err(Error::Training("non-finite actor gradient".into()));
    }
    for l in &mut g.layers {
        l.w.mapv_inplace(|v| -v);
        l.b.mapv_inplace(|v| -v);
    }
    opt.step(actor, &g);
    Ok(objective)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct UpdateCounters {
    pub critic_updates: u64,
    pub actor_updates: u64,
}

/// Estimator-level checks made on every update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    pub target_rows: u64,
    /// Rows where the clipped target exceeded either single-critic target.
    pub min_target_violations: u64,
    /// Smoothing perturbations outside `[-clip, clip]`.
    pub clip_violations: u64,
    pub max_abs_perturbation: f64,
}

/// Losses and objective from one learner tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateInfo {
    pub critic_losses: (f64, f64),
    pub actor_objective: Option<f64>,
}

/// Actor, twin critics, their targets and optimiser state.
#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub hyper: Td3Hyper,
    pub seed: u64,
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub actor_t: Mlp,
    pub critic1_t: Mlp,
    pub critic2_t: Mlp,
    opt_actor: Optimizer,
    opt_c1: Optimizer,
    opt_c2: Optimizer,
    rng: ChaCha8Rng,
    pub counters: UpdateCounters,
    pub diagnostics: Diagnostics,
}

impl Td3Agent {
    pub fn new(state_dim: usize, action_dim: usize, hyper: Td3Hyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let mut init = rng::stream(seed, 10);
        let h = hyper.hidden;
        let actor = Mlp::new(&[state_dim, h, h, h, action_dim], OutputActivation::Tanh, &mut init);
        let critic1 = Mlp::new(&[state_dim + action_dim, h, h, 1], OutputActivation::Identity, &mut init);
        let critic2 = Mlp::new(&[state_dim + action_dim, h, h, 1], OutputActivation::Identity, &mut init);
        Ok(Self {
            opt_actor: Optimizer::new(hyper.optimizer, hyper.lr_actor, &actor),
            opt_c1: Optimizer::new(hyper.optimizer, hyper.lr_critic, &critic1),
            opt_c2: Optimizer::new(hyper.optimizer, hyper.lr_critic, &critic2),
            actor_t: actor.clone(),
            critic1_t: critic1.clone(),
            critic2_t: critic2.clone(),
            actor,
            critic1,
            critic2,
            hyper,
            seed,
            rng: rng::stream(seed, 11),
            counters: UpdateCounters::default(),
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    /// Deterministic policy output.
    pub fn act(&self, s: &[f64]) -> Result<Vec<f64>> {
        self.actor.forward_one(s)
    }

    /// Bellman targets for a batch, recording the estimator diagnostics.
    pub fn compute_targets(&mut self, batch: &Batch) -> Result<Array1<f64>> {
        let (a_next, pert) = target_action(&self.actor_t, batch.s_next.view(), &mut self.rng, &self.hyper)?;
        let x = sa(batch.s_next.view(), a_next.view());
        let q1 = self.critic1_t.forward(x.view())?;
        let q2 = self.critic2_t.forward(x.view())?;
        let g = self.hyper.gamma;
        let c = self.hyper.target_noise_clip;
        let mut y = Array1::zeros(batch.len());
        for i in 0..batch.len() {
            let r = batch.r[i] * self.hyper.reward_scale;
            let done = batch.done[i] != 0.0;
            y[i] = bellman_target(r, done, q1[[i, 0]], q2[[i, 0]], g);
            let cont = if done { 0.0 } else { g };
            if y[i] > r + cont * q1[[i, 0]] || y[i] > r + cont * q2[[i, 0]] {
                self.diagnostics.min_target_violations += 1;
            }
        }
        for &p in pert.iter() {
            if p.abs() > c {
                self.diagnostics.clip_violations += 1;
            }
            self.diagnostics.max_abs_perturbation = self.diagnostics.max_abs_perturbation.max(p.abs());
        }
        self.diagnostics.target_rows += batch.len() as u64;
        Ok(y)
    }

    /// One learner tick: both critics every call, the actor and all targets
    /// every `policy_delay` critic updates.
    pub fn update(&mut self, replay: &ReplayBuffer) -> Result<UpdateInfo> {
        let batch = replay.sample(&mut self.rng, self.hyper.batch)?;
        let y = self.compute_targets(&batch)?;
        let l1 = critic_step(&mut self.critic1, &mut self.opt_c1, batch.s.view(), batch.a.view(), &y)?;
        let l2 = critic_step(&mut self.critic2, &mut self.opt_c2, batch.s.view(), batch.a.view(), &y)?;
        self.counters.critic_updates += 1;
        let mut actor_objective = None;
        if self.counters.critic_updates.is_multiple_of(self.hyper.policy_delay as u64) {
            actor_objective = Some(actor_step(&mut self.actor, &mut self.opt_actor, &self.critic1, batch.s.view())?);
            self.counters.actor_updates += 1;
            let tau = self.hyper.tau;
            self.actor_t.soft_update(&self.actor, tau)?;
            self.critic1_t.soft_update(&self.critic1, tau)?;
            self.critic2_t.soft_update(&self.critic2, tau)?;
        }
        if !self.actor.is_finite() || !self.critic1.is_finite() || !self.critic2.is_finite() {
            return Err(Error::Training(format!(
                "non-finite parameters after critic update {}",
                self.counters.critic_updates
            )));
        }
        Ok(UpdateInfo {
            critic_losses: (l1, l2),
            actor_objective,
        })
    }

    /// Networks in checkpoint order.
    pub fn networks(&self) -> [&Mlp; 6] {
        [&self.actor, &self.critic1, &self.critic2, &self.actor_t, &self.critic1_t, &self.critic2_t]
    }

    pub(crate) fn networks_mut(&mut self) -> [&mut Mlp; 6] {
        [
            &mut self.actor,
            &mut self.critic1,
            &mut self.critic2,
            &mut self.actor_t,
            &mut self.critic1_t,
            &mut self.critic2_t,
        ]
    }
}
