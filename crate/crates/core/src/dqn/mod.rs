//! Replay-buffer DQN, curricula and evaluation.

mod curriculum;
mod replay;
mod rollout;
mod train;

pub use curriculum::{schedule_tick, simulate_subgoal, warm_start, CurriculumMode, CurriculumSchedule};
pub use replay::{ReplayBuffer, Transition};
pub use rollout::{rollout, Episode, OraclePolicy, Policy, QWebPolicy, RandomPolicy};
pub use train::{
    evaluate, td_loss_and_grad, td_targets, train_step, DqnConfig, EpisodeStats, Trainer, Workspace,
};

use crate::dom::DomError;
use crate::env::EnvError;
use crate::nn::NnError;

#[derive(Debug, thiserror::Error)]
pub enum DqnError {
    #[error("replay buffer is empty")]
    EmptyBuffer,
    #[error("batch of {batch} requested from a buffer of {size}")]
    BatchTooLarge { batch: usize, size: usize },
    #[error("K = {k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("transition has no encoded state")]
    NotEncoded,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dom(#[from] DomError),
}

/// Derives an independent seed for a named stream from a master seed.
pub fn seed_stream(master: u64, stream: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325 ^ master.wrapping_mul(0x9e3779b97f4a7c15);
    for b in stream.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^ (h >> 29)
}
