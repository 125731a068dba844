//! Episodic web-navigation environments over DOM trees.
//!
//! An episode is described by a [`Task`]: the instruction, the initial page,
//! the goal page with its reward-relevant elements, and the elements whose
//! click ends the episode. [`WebEnv`] samples tasks from one of the
//! registered page generators and runs episodes with composite actions.

mod oracle;
mod semantics;
mod shaping;
mod suite;
mod trace;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::{DomError, DomTree, ElementId, Goal, Instruction};

pub use oracle::{correct_action, oracle_action};
pub use semantics::{apply_action, is_active, is_text_input, Applied, ACTIVE_CLASS};
pub use shaping::{potential, shaped_reward, success_rate};
pub use suite::{EnvKind, SuiteScale};
pub use trace::{read_trace, TraceRecord, TraceWriter};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("unknown environment {0:?} (known: {known})", known = EnvKind::names().join(", "))]
    UnknownEnv(String),
    #[error("invalid episode config: {0}")]
    Config(String),
    #[error("no active episode; call reset or start first")]
    NotActive,
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("element {0} is neither reward-relevant nor terminal")]
    NotATarget(ElementId),
    #[error("element {0} already matches the goal")]
    AlreadyResolved(ElementId),
    #[error("no oracle action for element {0}")]
    NoOracleAction(ElementId),
    #[error("outcome list is empty")]
    EmptyOutcomes,
    #[error("outcome {0} is not terminal")]
    NotTerminal(usize),
    #[error(transparent)]
    Dom(#[from] DomError),
    #[error("trace io: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace format: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Click,
    Type,
}

impl Verb {
    pub const ALL: [Verb; 2] = [Verb::Click, Verb::Type];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// `Click(e)` or `Type(e, field)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompositeAction {
    pub element: ElementId,
    pub verb: Verb,
    #[serde(rename = "field")]
    pub field_index: Option<usize>,
}

impl CompositeAction {
    pub fn click(element: ElementId) -> Self {
        CompositeAction {
            element,
            verb: Verb::Click,
            field_index: None,
        }
    }

    pub fn type_field(element: ElementId, field_index: usize) -> Self {
        CompositeAction {
            element,
            verb: Verb::Type,
            field_index: Some(field_index),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub next_state: DomTree,
    /// Total reward, including the shaping term when enabled.
    pub reward: f64,
    /// The shaping term alone (zero when shaping is off).
    pub shaping: f64,
    pub done: bool,
    pub success: Option<bool>,
}

impl StepOutcome {
    /// Reward without the shaping term.
    pub fn env_reward(&self) -> f64 {
        self.reward - self.shaping
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    /// `None` uses the environment default (instruction fields + 3, or the
    /// task length when that is larger).
    pub max_steps: Option<usize>,
    pub step_penalty: f64,
    pub gamma: f64,
    pub shaping_enabled: bool,
    pub seed: u64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            max_steps: None,
            step_penalty: -0.1,
            gamma: 0.99,
            shaping_enabled: false,
            seed: 0,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.max_steps == Some(0) {
            return Err(EnvError::Config("max_steps must be at least 1".into()));
        }
        if !(self.step_penalty <= 0.0) {
            return Err(EnvError::Config("step_penalty must be <= 0".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(EnvError::Config("gamma must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// One episode's instruction, start page and goal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub instruction: Instruction,
    pub initial: DomTree,
    pub goal: Goal,
    /// Elements whose click ends the episode.
    pub terminal: Vec<ElementId>,
    /// Default step cap for this task.
    pub max_steps: usize,
}

impl Task {
    pub fn is_relevant(&self, id: ElementId) -> bool {
        self.goal.relevant.contains(&id)
    }

    pub fn is_terminal(&self, id: ElementId) -> bool {
        self.terminal.contains(&id)
    }
}

#[derive(Clone, Debug)]
struct Episode {
    task: Task,
    state: DomTree,
    t: usize,
    max_steps: usize,
    done: bool,
}

/// A single-owner environment instance.
#[derive(Clone, Debug)]
pub struct WebEnv {
    kind: EnvKind,
    scale: SuiteScale,
    config: EpisodeConfig,
    rng: ChaCha8Rng,
    episode: Option<Episode>,
}

impl WebEnv {
    pub fn new(name: &str, config: EpisodeConfig) -> Result<Self, EnvError> {
        Self::with_scale(name, config, SuiteScale::default())
    }

    pub fn with_scale(
        name: &str,
        config: EpisodeConfig,
        scale: SuiteScale,
    ) -> Result<Self, EnvError> {
        config.validate()?;
        let kind = EnvKind::parse(name)?;
        Ok(WebEnv {
            kind,
            scale,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            episode: None,
        })
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn scale(&self) -> &SuiteScale {
        &self.scale
    }

    pub fn set_shaping(&mut self, enabled: bool) {
        self.config.shaping_enabled = enabled;
    }

    /// Every string the generator can put on a page or in an instruction.
    pub fn vocabulary(&self) -> Vec<String> {
        self.kind.vocabulary(&self.scale)
    }

    /// Values the environment types into text boxes (the knowledge source).
    pub fn value_vocabulary(&self) -> Vec<String> {
        self.kind.value_vocabulary(&self.scale)
    }

    /// Instruction keys the environment uses.
    pub fn keys(&self) -> Vec<String> {
        self.kind.keys()
    }

    /// Draws the next task from the environment's own stream.
    pub fn sample_task(&mut self) -> Task {
        self.kind.generate(&mut self.rng, &self.scale)
    }

    /// Samples a task and starts an episode on it.
    pub fn reset(&mut self) -> &Task {
        let task = self.sample_task();
        self.start(task)
    }

    /// Starts an episode on an explicit task (warm-started, sub-goal, or imposed).
    pub fn start(&mut self, task: Task) -> &Task {
        let max_steps = self.config.max_steps.unwrap_or(task.max_steps);
        let state = task.initial.clone();
        self.episode = Some(Episode {
            task,
            state,
            t: 0,
            max_steps,
            done: false,
        });
        &self.episode.as_ref().unwrap().task
    }

    pub fn task(&self) -> Option<&Task> {
        self.episode.as_ref().map(|e| &e.task)
    }

    pub fn state(&self) -> Option<&DomTree> {
        self.episode.as_ref().map(|e| &e.state)
    }

    pub fn steps_taken(&self) -> usize {
        self.episode.as_ref().map_or(0, |e| e.t)
    }

    pub fn max_steps(&self) -> Option<usize> {
        self.episode.as_ref().map(|e| e.max_steps)
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().map_or(true, |e| e.done)
    }

    pub fn step(&mut self, action: CompositeAction) -> Result<StepOutcome, EnvError> {
        let cfg = self.config.clone();
        let ep = self.episode.as_mut().ok_or(EnvError::NotActive)?;
        if ep.done {
            return Err(EnvError::EpisodeFinished);
        }
        let applied = apply_action(&ep.state, &ep.task.instruction, action);
        ep.t += 1;
        let clicked_terminal =
            applied.valid && action.verb == Verb::Click && ep.task.is_terminal(action.element);
        let done = clicked_terminal || ep.t >= ep.max_steps;

        let mut reward = cfg.step_penalty;
        let mut success = None;
        if done {
            let ok = ep.task.goal.is_satisfied(&applied.tree)?;
            reward += if ok { 1.0 } else { -1.0 };
            success = Some(ok);
        }
        let shaping = if cfg.shaping_enabled {
            shaped_reward(&ep.state, &applied.tree, &ep.task.goal, cfg.gamma)?
        } else {
            0.0
        };
        reward += shaping;

        ep.state = applied.tree;
        ep.done = done;
        Ok(StepOutcome {
            next_state: ep.state.clone(),
            reward,
            shaping,
            done,
            success,
        })
    }

    /// The scripted expert's action for the current episode.
    pub fn oracle_action(&self, target: Option<ElementId>) -> Result<CompositeAction, EnvError> {
        let ep = self.episode.as_ref().ok_or(EnvError::NotActive)?;
        if ep.done {
            return Err(EnvError::EpisodeFinished);
        }
        oracle_action(&ep.task, &ep.state, target)
    }
}

/// Samples the first task for `(env_name, config.seed)`.
pub fn reset(env_name: &str, config: &EpisodeConfig) -> Result<Task, EnvError> {
    let mut env = WebEnv::new(env_name, config.clone())?;
    Ok(env.sample_task())
}
