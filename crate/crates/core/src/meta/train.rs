use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dom::{Attr, DomTree, Goal, Instruction};
use crate::dqn::{rollout, seed_stream, DqnError, Episode, EpisodeStats, OraclePolicy, QWebPolicy, ReplayBuffer, Trainer};
use crate::env::{EnvError, EpisodeConfig, SuiteScale, Task, WebEnv};
use crate::nn::{Grads, NnError, Optimizer, ParamStore, Tape};
use crate::qweb::{QWebNet, SelectMode};

use super::inet::{EncodedGoal, Inet};
use super::instr_env::{instr_env_step, instruction_success, key_elements, produced_instruction};
use super::rrnd::{rrnd, GoalPath};
use super::{InstructionGenAction, InstructionGenState, MetaError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InetTrainConfig {
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub updates_per_goal: usize,
    pub optimizer: Optimizer,
    pub temperature_start: f64,
    pub temperature_end: f64,
    /// Goals over which the temperature is annealed.
    pub temperature_anneal_goals: usize,
    pub grad_clip: Option<f64>,
}

impl Default for InetTrainConfig {
    fn default() -> Self {
        InetTrainConfig {
            batch_size: 16,
            replay_capacity: 10_000,
            updates_per_goal: 2,
            optimizer: Optimizer::default(),
            temperature_start: 1.0,
            temperature_end: 0.1,
            temperature_anneal_goals: 1000,
            grad_clip: Some(10.0),
        }
    }
}

impl InetTrainConfig {
    pub fn validate(&self) -> Result<(), MetaError> {
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return Err(MetaError::Config("need 0 < batch_size <= replay_capacity".into()));
        }
        if self.temperature_start <= 0.0 || self.temperature_end <= 0.0 {
            return Err(MetaError::Config("temperatures must be positive".into()));
        }
        Ok(())
    }
}

/// One instruction-generation step. Every key is its own one-step episode.
#[derive(Clone, Debug)]
pub struct InetTransition {
    pub goal: Arc<EncodedGoal>,
    pub key: Arc<Vec<usize>>,
    pub element_pos: usize,
    pub attribute: Attr,
    pub reward: f64,
}

/// Mean squared error between `Q(s, a)` and the reward; gradients go into
/// `grads`, which is zeroed first.
pub fn inet_loss_and_grad(
    net: &Inet,
    params: &ParamStore,
    batch: &[&InetTransition],
    tape: &mut Tape,
    grads: &mut Grads,
) -> Result<f64, MetaError> {
    tape.clear();
    grads.zero();
    let mut terms = Vec::with_capacity(batch.len());
    for t in batch {
        let q = net.forward(tape, params, &t.goal, &t.key)?;
        let qa = q.composite(tape, t.element_pos, t.attribute);
        let y = tape.vector(&[t.reward]);
        let d = tape.sub(qa, y);
        terms.push(tape.square(d));
    }
    let all = tape.concat(&terms);
    let loss = tape.mean(all);
    let value = tape.scalar(loss);
    if !value.is_finite() {
        return Err(MetaError::Dqn(DqnError::NonFinite(format!("INET loss {value}"))));
    }
    tape.backward(loss, params, grads);
    Ok(value)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InetEpisode {
    pub correct: usize,
    pub keys: usize,
    pub mean_loss: Option<f64>,
}

/// Trains INET on the goals of an environment with categorical exploration.
pub struct InetTrainer {
    pub net: Inet,
    pub params: ParamStore,
    pub config: InetTrainConfig,
    pub env: WebEnv,
    buffer: ReplayBuffer<InetTransition>,
    rng: ChaCha8Rng,
    goals: usize,
    tape: Tape,
    grads: Grads,
}

impl InetTrainer {
    pub fn new(net: Inet, params: ParamStore, env: WebEnv, config: InetTrainConfig, seed: u64) -> Result<Self, MetaError> {
        config.validate()?;
        Ok(InetTrainer {
            buffer: ReplayBuffer::new(config.replay_capacity, seed_stream(seed, "inet.replay")),
            rng: ChaCha8Rng::seed_from_u64(seed_stream(seed, "inet.policy")),
            grads: params.zero_grads(),
            tape: Tape::new(),
            net,
            params,
            config,
            env,
            goals: 0,
        })
    }

    pub fn goals(&self) -> usize {
        self.goals
    }

    pub fn temperature(&self) -> f64 {
        let c = &self.config;
        let frac = if c.temperature_anneal_goals == 0 {
            1.0
        } else {
            (self.goals as f64 / c.temperature_anneal_goals as f64).min(1.0)
        };
        c.temperature_start + (c.temperature_end - c.temperature_start) * frac
    }

    /// Generates an instruction for one sampled goal, stores the transitions
    /// and runs the configured updates.
    pub fn run_goal(&mut self) -> Result<InetEpisode, MetaError> {
        let task = self.env.sample_task();
        let tree = Arc::new(task.goal.tree.clone());
        let encoded = Arc::new(self.net.encode_goal(&tree));
        let mut keys: Vec<String> = task.instruction.fields.iter().map(|f| f.key.clone()).collect();
        keys.shuffle(&mut self.rng);
        let temperature = self.temperature();
        let mut state = Some(InstructionGenState::new(tree, keys)?);
        let (mut correct, mut n) = (0, 0);
        while let Some(s) = state {
            let key = Arc::new(self.net.encode_key(&s.current_key));
            let q = self.net.q_values(&mut self.tape, &self.params, &encoded, &key)?;
            let (pos, attribute) = q.sample(temperature, &mut self.rng);
            let action = InstructionGenAction {
                element: encoded.order[pos],
                attribute,
            };
            let out = instr_env_step(&s, action, &task.instruction);
            correct += (out.reward > 0.0) as usize;
            n += 1;
            self.buffer.push(InetTransition {
                goal: encoded.clone(),
                key,
                element_pos: pos,
                attribute,
                reward: out.reward,
            });
            state = out.next;
        }
        self.goals += 1;
        let mut loss = 0.0;
        let mut updates = 0;
        for _ in 0..self.config.updates_per_goal {
            if self.buffer.len() < self.config.batch_size {
                break;
            }
            loss += self.train_step()?;
            updates += 1;
        }
        Ok(InetEpisode {
            correct,
            keys: n,
            mean_loss: (updates > 0).then(|| loss / updates as f64),
        })
    }

    pub fn train_step(&mut self) -> Result<f64, MetaError> {
        let batch = self.buffer.sample(self.config.batch_size)?;
        let loss = inet_loss_and_grad(&self.net, &self.params, &batch, &mut self.tape, &mut self.grads)?;
        if let Some(c) = self.config.grad_clip {
            self.grads.clip_norm(c);
        }
        self.config.optimizer.step(&mut self.params, &self.grads)?;
        Ok(loss)
    }
}

/// Held-out instruction accuracy with per-key error counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InetReport {
    pub goals: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Wrongly generated values per key.
    pub key_errors: BTreeMap<String, usize>,
}

impl InetReport {
    /// Fraction of all wrong values that belong to `key`.
    pub fn error_share(&self, key: &str) -> f64 {
        let total: usize = self.key_errors.values().sum();
        if total == 0 {
            return 0.0;
        }
        self.key_errors.get(key).copied().unwrap_or(0) as f64 / total as f64
    }
}

/// Greedy INET decoding on `n` fresh goals of `env_name`.
pub fn evaluate_inet(
    net: &Inet,
    params: &ParamStore,
    env_name: &str,
    scale: &SuiteScale,
    n: usize,
    seed: u64,
) -> Result<InetReport, MetaError> {
    if n == 0 {
        return Err(MetaError::Config("evaluation needs at least one goal".into()));
    }
    let mut env = WebEnv::with_scale(env_name, EpisodeConfig::default().with_seed(seed), scale.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed_stream(seed, "inet.eval"));
    let mut report = InetReport {
        goals: n,
        successes: 0,
        success_rate: 0.0,
        key_errors: BTreeMap::new(),
    };
    for k in env.keys() {
        report.key_errors.insert(k, 0);
    }
    for _ in 0..n {
        let task = env.sample_task();
        let mut keys: Vec<String> = task.instruction.fields.iter().map(|f| f.key.clone()).collect();
        keys.shuffle(&mut rng);
        let pairs = net.decode(params, &task.goal.tree, &keys)?;
        for (k, v) in &pairs {
            if task.instruction.value_of(k) != Some(v.as_str()) {
                *report.key_errors.entry(k.clone()).or_insert(0) += 1;
            }
        }
        let ok = produced_instruction(&pairs).is_ok_and(|i| instruction_success(&i, &task.instruction));
        report.successes += ok as usize;
    }
    report.success_rate = report.successes as f64 / n as f64;
    Ok(report)
}

/// Produces `(key, value)` pairs describing a goal page.
pub trait Instructor {
    /// `native` is an environment task on the same page layout as `goal`.
    fn instruct(&mut self, native: &Task, goal: &DomTree, keys: &[String]) -> Result<Vec<(String, String)>, MetaError>;
}

/// Greedy decoding with a frozen INET.
pub struct InetInstructor<'a> {
    pub net: &'a Inet,
    pub params: &'a ParamStore,
}

impl Instructor for InetInstructor<'_> {
    fn instruct(&mut self, _: &Task, goal: &DomTree, keys: &[String]) -> Result<Vec<(String, String)>, MetaError> {
        Ok(self.net.decode(self.params, goal, keys)?)
    }
}

/// Reads each key's value from the element and attribute that carry it in
/// the native task.
#[derive(Clone, Copy, Debug, Default)]
pub struct OracleInstructor;

impl Instructor for OracleInstructor {
    fn instruct(&mut self, native: &Task, goal: &DomTree, keys: &[String]) -> Result<Vec<(String, String)>, MetaError> {
        let slots = key_elements(native);
        Ok(keys
            .iter()
            .map(|k| {
                let v = slots
                    .iter()
                    .find(|(key, _)| key == k)
                    .and_then(|(_, a)| *a)
                    .and_then(|a| goal.get(a.element).map(|e| e.attr(a.attribute).to_string()))
                    .unwrap_or_default();
                (k.clone(), v)
            })
            .collect())
    }
}

/// A synthesized task, or the pairs that failed to form an instruction.
#[derive(Clone, Debug)]
pub enum Generated {
    Task { task: Task, path: GoalPath },
    Malformed(Vec<(String, String)>),
}

/// RRND goal on a fresh page of `env`, described by `instructor`. The goal
/// keeps the environment's reward-relevant elements and terminals.
pub fn generate_task<I: Instructor + ?Sized, R: Rng + ?Sized>(
    env: &mut WebEnv,
    instructor: &mut I,
    knowledge_source: &[String],
    rng: &mut R,
) -> Result<Generated, MetaError> {
    let native = env.sample_task();
    let (goal, path) = rrnd(&native.initial, knowledge_source, rng.gen())?;
    let mut keys: Vec<String> = native.instruction.fields.iter().map(|f| f.key.clone()).collect();
    keys.shuffle(rng);
    let pairs = instructor.instruct(&native, &goal, &keys)?;
    let Ok(instruction) = produced_instruction(&pairs) else {
        return Ok(Generated::Malformed(pairs));
    };
    let task = Task {
        instruction,
        goal: Goal::new(goal, native.goal.relevant.clone())?,
        initial: native.initial,
        terminal: native.terminal,
        max_steps: native.max_steps,
    };
    Ok(Generated::Task { task, path })
}

/// Whether the scripted oracle solves `task`, the environment's own check
/// that an instruction and goal fit together.
///
/// An instruction that does not spell a goal value leaves the oracle without
/// an action, which counts as inconsistent.
pub fn consistent(env: &mut WebEnv, task: Task) -> Result<bool, MetaError> {
    match rollout(&mut OraclePolicy, env, task, None) {
        Ok(ep) => Ok(ep.success()),
        Err(DqnError::Env(EnvError::NoOracleAction(_))) => Ok(false),
        Err(e) => Err(e.into()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaStats {
    pub steps: usize,
    pub success: bool,
    pub mean_loss: Option<f64>,
    pub malformed: bool,
    /// Summed shaping reward against the generated goal.
    pub r1: f64,
    /// Summed environment reward.
    pub r2: f64,
}

/// QWeb trained only on synthesized tasks, with INET frozen.
pub struct MetaQWeb {
    pub trainer: Trainer,
    inet: Inet,
    inet_params: ParamStore,
    knowledge_source: Vec<String>,
    rng: ChaCha8Rng,
    pub malformed: usize,
    pub last_episode: Option<Episode>,
}

impl MetaQWeb {
    /// Turns shaping on in the trainer's environment; the knowledge source
    /// is the environment's value vocabulary.
    pub fn new(mut trainer: Trainer, inet: Inet, inet_params: ParamStore, seed: u64) -> Self {
        trainer.env.set_shaping(true);
        let knowledge_source = trainer.env.value_vocabulary();
        MetaQWeb {
            trainer,
            inet,
            inet_params,
            knowledge_source,
            rng: ChaCha8Rng::seed_from_u64(seed_stream(seed, "meta")),
            malformed: 0,
            last_episode: None,
        }
    }

    pub fn inet(&self) -> (&Inet, &ParamStore) {
        (&self.inet, &self.inet_params)
    }

    pub fn knowledge_source(&self) -> &[String] {
        &self.knowledge_source
    }

    /// RRND goal, greedy INET instruction, one QWeb episode with
    /// `R = R1 + R2`, then the trainer's updates.
    pub fn meta_train_step(&mut self) -> Result<MetaStats, MetaError> {
        let mut instructor = InetInstructor {
            net: &self.inet,
            params: &self.inet_params,
        };
        let generated = generate_task(&mut self.trainer.env, &mut instructor, &self.knowledge_source, &mut self.rng)?;
        let task = match generated {
            Generated::Task { task, .. } => task,
            Generated::Malformed(_) => {
                self.malformed += 1;
                return Ok(MetaStats {
                    steps: 0,
                    success: false,
                    mean_loss: None,
                    malformed: true,
                    r1: 0.0,
                    r2: 0.0,
                });
            }
        };
        let (EpisodeStats { steps, success, mean_loss }, ep) = self.trainer.run_task(task)?;
        let r1 = ep.outcomes.iter().map(|o| o.shaping).sum();
        let r2 = ep.outcomes.iter().map(|o| o.env_reward()).sum();
        self.last_episode = Some(ep);
        Ok(MetaStats {
            steps,
            success,
            mean_loss,
            malformed: false,
            r1,
            r2,
        })
    }
}

/// Greedy QWeb success on `n` synthesized tasks (malformed ones are redrawn).
#[allow(clippy::too_many_arguments)]
pub fn meta_test(
    net: &QWebNet,
    params: &ParamStore,
    inet: &Inet,
    inet_params: &ParamStore,
    env_name: &str,
    scale: &SuiteScale,
    n: usize,
    seed: u64,
) -> Result<f64, MetaError> {
    if n == 0 {
        return Err(MetaError::Config("evaluation needs at least one episode".into()));
    }
    let mut env = WebEnv::with_scale(env_name, EpisodeConfig::default().with_seed(seed), scale.clone())?;
    let ks = env.value_vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(seed_stream(seed, "meta.test"));
    let mut policy_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = QWebPolicy::new(net, params, SelectMode::Greedy, 1.0, &mut policy_rng);
    let mut instructor = InetInstructor { net: inet, params: inet_params };
    let (mut wins, mut done, mut attempts) = (0, 0, 0);
    while done < n {
        attempts += 1;
        if attempts > 100 * n {
            return Err(MetaError::Config("instructor keeps producing malformed instructions".into()));
        }
        if let Generated::Task { task, .. } = generate_task(&mut env, &mut instructor, &ks, &mut rng)? {
            wins += rollout(&mut policy, &mut env, task, Some(&net.vocab))?.success() as usize;
            done += 1;
        }
    }
    Ok(wins as f64 / n as f64)
}

/// One exported synthesized pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub instruction: Instruction,
    pub goal_tree: DomTree,
    pub source: String,
}

/// `count` well-formed synthesized pairs.
pub fn generate_corpus<I: Instructor + ?Sized>(
    env: &mut WebEnv,
    instructor: &mut I,
    source: &str,
    count: usize,
    seed: u64,
) -> Result<Vec<CorpusRecord>, MetaError> {
    let ks = env.value_vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(seed_stream(seed, "corpus"));
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count.max(1) {
            return Err(MetaError::Config("instructor keeps producing malformed instructions".into()));
        }
        if let Generated::Task { task, .. } = generate_task(env, instructor, &ks, &mut rng)? {
            out.push(CorpusRecord {
                instruction: task.instruction,
                goal_tree: task.goal.tree,
                source: source.to_string(),
            });
        }
    }
    Ok(out)
}

impl From<NnError> for MetaError {
    fn from(e: NnError) -> Self {
        MetaError::Nn(e)
    }
}
