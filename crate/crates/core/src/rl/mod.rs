//! TD3 with hand-written backpropagation, shared across AUVs.

mod checkpoint;
mod net;
mod optim;
mod replay;
mod td3;
mod train;

pub use checkpoint::Checkpoint;
pub use net::{Cache, Dense, Grads, Mlp, OutputActivation};
pub use optim::{Adam, Optimizer, OptimizerKind};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use td3::{
    actor_gradient, actor_step, bellman_target, critic_gradient, critic_step, select_action, target_action, target_action_with_noise, Diagnostics,
    Td3Agent, Td3Hyper, UpdateCounters, UpdateInfo,
};
pub use train::{
    episode_seed, train, ActorPolicy, ConvergenceDetector, CurveRow, EnvStep, Environment, EpisodeReport, EpisodeScores, TrainOutcome,
};
