use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{EpisodeConfig, SuiteScale, Task, WebEnv};
use crate::nn::{Grads, Optimizer, ParamStore, Tape};
use crate::qweb::{QWebNet, SelectMode};

use super::curriculum::{simulate_subgoal, warm_start, CurriculumMode, CurriculumSchedule};
use super::replay::{ReplayBuffer, Transition};
use super::rollout::{rollout, Episode, QWebPolicy};
use super::{seed_stream, DqnError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub gamma: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Train steps between target syncs; `None` bootstraps from the online net.
    pub target_sync: Option<usize>,
    pub updates_per_episode: usize,
    pub optimizer: Optimizer,
    pub temperature_start: f64,
    pub temperature_end: f64,
    pub temperature_anneal_steps: usize,
    /// Global gradient-norm cap; `None` disables clipping.
    pub grad_clip: Option<f64>,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            gamma: 0.99,
            batch_size: 16,
            replay_capacity: 25_000,
            target_sync: Some(100),
            updates_per_episode: 4,
            optimizer: Optimizer::default(),
            temperature_start: 1.0,
            temperature_end: 0.1,
            temperature_anneal_steps: 20_000,
            grad_clip: Some(10.0),
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<(), DqnError> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(DqnError::Config(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return Err(DqnError::Config("need 0 < batch_size <= replay_capacity".into()));
        }
        if self.target_sync == Some(0) {
            return Err(DqnError::Config("target_sync must be positive".into()));
        }
        if self.temperature_start <= 0.0 || self.temperature_end <= 0.0 {
            return Err(DqnError::Config("temperatures must be positive".into()));
        }
        Ok(())
    }

    pub fn temperature(&self, step: usize) -> f64 {
        let frac = if self.temperature_anneal_steps == 0 {
            1.0
        } else {
            (step as f64 / self.temperature_anneal_steps as f64).min(1.0)
        };
        self.temperature_start + (self.temperature_end - self.temperature_start) * frac
    }
}

/// Scratch buffers reused across updates.
pub struct Workspace {
    tape: Tape,
    target_tape: Tape,
    grads: Grads,
}

impl Workspace {
    pub fn new(params: &ParamStore) -> Self {
        Workspace {
            tape: Tape::new(),
            target_tape: Tape::new(),
            grads: params.zero_grads(),
        }
    }
}

/// TD(0) targets `r + γ·max Q_target(s')` (just `r` when done).
pub fn td_targets(
    batch: &[&Transition],
    net: &QWebNet,
    target: &ParamStore,
    gamma: f64,
    tape: &mut Tape,
) -> Result<Vec<f64>, DqnError> {
    let mut ys = Vec::with_capacity(batch.len());
    for t in batch {
        let y = if t.done {
            t.reward
        } else {
            let (_, next) = t.encoded.as_ref().ok_or(DqnError::NotEncoded)?;
            let q = net.q_values_with(tape, target, next)?;
            t.reward + gamma * q.max_composite()
        };
        ys.push(y);
    }
    Ok(ys)
}

/// Squared TD error of `batch` against `targets`, averaged; accumulates the
/// gradient into `grads` (which is zeroed first).
pub fn td_loss_and_grad(
    batch: &[&Transition],
    targets: &[f64],
    net: &QWebNet,
    params: &ParamStore,
    tape: &mut Tape,
    grads: &mut Grads,
) -> Result<f64, DqnError> {
    tape.clear();
    grads.zero();
    let mut terms = Vec::with_capacity(batch.len());
    for (t, &y) in batch.iter().zip(targets) {
        let (enc, _) = t.encoded.as_ref().ok_or(DqnError::NotEncoded)?;
        let la = t.leaf_action.ok_or(DqnError::NotEncoded)?;
        let q = net.forward(tape, params, enc)?;
        let qa = tape_composite(tape, &q, la);
        let yv = tape.vector(&[y]);
        let d = tape.sub(qa, yv);
        terms.push(tape.square(d));
    }
    let all = tape.concat(&terms);
    let loss = tape.mean(all);
    let value = tape.scalar(loss);
    if !value.is_finite() {
        return Err(DqnError::NonFinite(format!("loss {value}")));
    }
    tape.backward(loss, params, grads);
    Ok(value)
}

fn tape_composite(tape: &mut Tape, q: &crate::qweb::QVars, la: crate::qweb::LeafAction) -> crate::nn::Var {
    q.composite(tape, la.leaf, la.verb.index(), la.field)
}

/// One gradient step on a batch drawn from `buffer`. Returns the batch loss.
#[allow(clippy::too_many_arguments)]
pub fn train_step(
    buffer: &mut ReplayBuffer,
    net: &QWebNet,
    params: &mut ParamStore,
    target: Option<&ParamStore>,
    batch_size: usize,
    gamma: f64,
    optimizer: &Optimizer,
    grad_clip: Option<f64>,
    ws: &mut Workspace,
) -> Result<f64, DqnError> {
    let batch = buffer.sample(batch_size)?;
    let targets = td_targets(&batch, net, target.unwrap_or(params), gamma, &mut ws.target_tape)?;
    let loss = td_loss_and_grad(&batch, &targets, net, params, &mut ws.tape, &mut ws.grads)?;
    if let Some(c) = grad_clip {
        ws.grads.clip_norm(c);
    }
    optimizer.step(params, &ws.grads)?;
    Ok(loss)
}

/// Greedy success rate over `n_episodes` fresh tasks, with shaping off.
pub fn evaluate(
    net: &QWebNet,
    params: &ParamStore,
    env_name: &str,
    scale: &SuiteScale,
    episode: &EpisodeConfig,
    n_episodes: usize,
    seed: u64,
) -> Result<f64, DqnError> {
    if n_episodes == 0 {
        return Err(DqnError::Config("evaluation needs at least one episode".into()));
    }
    let mut cfg = episode.clone().with_seed(seed);
    cfg.shaping_enabled = false;
    let mut env = WebEnv::with_scale(env_name, cfg, scale.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = QWebPolicy::new(net, params, SelectMode::Greedy, 1.0, &mut rng);
    let mut wins = 0;
    for _ in 0..n_episodes {
        let task = env.sample_task();
        let ep = rollout(&mut policy, &mut env, task, Some(&net.vocab))?;
        wins += ep.success() as usize;
    }
    Ok(wins as f64 / n_episodes as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeStats {
    pub steps: usize,
    pub success: bool,
    pub mean_loss: Option<f64>,
}

/// The replay-buffer DQN loop with optional curriculum.
pub struct Trainer {
    pub net: QWebNet,
    pub params: ParamStore,
    pub target: ParamStore,
    pub buffer: ReplayBuffer,
    pub config: DqnConfig,
    pub schedule: CurriculumSchedule,
    pub env: WebEnv,
    rng: ChaCha8Rng,
    step: usize,
    train_steps: usize,
    ws: Workspace,
}

impl Trainer {
    pub fn new(
        net: QWebNet,
        params: ParamStore,
        env: WebEnv,
        config: DqnConfig,
        schedule: CurriculumSchedule,
        seed: u64,
    ) -> Result<Self, DqnError> {
        config.validate()?;
        schedule.validate()?;
        let ws = Workspace::new(&params);
        Ok(Trainer {
            target: params.clone(),
            buffer: ReplayBuffer::new(config.replay_capacity, seed_stream(seed, "replay")),
            rng: ChaCha8Rng::seed_from_u64(seed_stream(seed, "policy")),
            net,
            params,
            config,
            schedule,
            env,
            step: 0,
            train_steps: 0,
            ws,
        })
    }

    /// Environment steps taken so far.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn train_steps(&self) -> usize {
        self.train_steps
    }

    /// Restores counters when resuming from a checkpoint.
    pub fn set_progress(&mut self, step: usize, train_steps: usize) {
        self.step = step;
        self.train_steps = train_steps;
    }

    pub fn temperature(&self) -> f64 {
        self.config.temperature(self.step)
    }

    pub fn curriculum(&self) -> (f64, usize) {
        self.schedule.tick(self.step)
    }

    /// Samples a task and applies the active curriculum.
    pub fn next_task(&mut self) -> Result<Task, DqnError> {
        let task = self.env.sample_task();
        let (p, k) = self.curriculum();
        match self.schedule.mode {
            CurriculumMode::Off => Ok(task),
            CurriculumMode::WarmStart => warm_start(&task, p, &mut self.rng),
            CurriculumMode::GoalSim => {
                let k = k.min(task.goal.relevant.len());
                simulate_subgoal(&task, k, &mut self.rng)
            }
        }
    }

    /// Collects one episode with categorical exploration on `task`, then runs
    /// the configured number of updates.
    pub fn run_task(&mut self, task: Task) -> Result<(EpisodeStats, Episode), DqnError> {
        let temperature = self.temperature();
        let mut policy = QWebPolicy::new(&self.net, &self.params, SelectMode::Categorical, temperature, &mut self.rng);
        let ep = rollout(&mut policy, &mut self.env, task, Some(&self.net.vocab))?;
        self.step += ep.transitions.len();
        for t in &ep.transitions {
            self.buffer.push(t.clone());
        }
        let mut loss_sum = 0.0;
        let mut updates = 0;
        for _ in 0..self.config.updates_per_episode {
            if self.buffer.len() < self.config.batch_size {
                break;
            }
            let target = self.config.target_sync.map(|_| &self.target);
            loss_sum += train_step(
                &mut self.buffer,
                &self.net,
                &mut self.params,
                target,
                self.config.batch_size,
                self.config.gamma,
                &self.config.optimizer,
                self.config.grad_clip,
                &mut self.ws,
            )?;
            updates += 1;
            self.train_steps += 1;
            if let Some(sync) = self.config.target_sync {
                if self.train_steps % sync == 0 {
                    self.target.copy_values_from(&self.params)?;
                }
            }
        }
        let stats = EpisodeStats {
            steps: ep.transitions.len(),
            success: ep.success(),
            mean_loss: (updates > 0).then(|| loss_sum / updates as f64),
        };
        Ok((stats, ep))
    }

    pub fn run_episode(&mut self) -> Result<EpisodeStats, DqnError> {
        let task = self.next_task()?;
        Ok(self.run_task(task)?.0)
    }
}
