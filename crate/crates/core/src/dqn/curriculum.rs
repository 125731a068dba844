use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dom::{Goal, Instruction};
use crate::env::{apply_action, correct_action, Task};

use super::DqnError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurriculumMode {
    Off,
    WarmStart,
    GoalSim,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumSchedule {
    pub mode: CurriculumMode,
    pub p0: f64,
    pub decay: f64,
    pub decay_interval: usize,
    /// Step after which the original task is restored (`p = 0`, `K = K_max`).
    pub limit: usize,
    pub k0: usize,
    pub k_max: usize,
}

impl Default for CurriculumSchedule {
    fn default() -> Self {
        CurriculumSchedule {
            mode: CurriculumMode::Off,
            p0: 0.85,
            decay: 0.9,
            decay_interval: 1000,
            limit: 50_000,
            k0: 1,
            k_max: 3,
        }
    }
}

impl CurriculumSchedule {
    pub fn validate(&self) -> Result<(), DqnError> {
        if !(0.0..=1.0).contains(&self.p0) {
            return Err(DqnError::Config(format!("p0 {} outside [0, 1]", self.p0)));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(DqnError::Config(format!("decay {} outside (0, 1)", self.decay)));
        }
        if self.decay_interval == 0 {
            return Err(DqnError::Config("decay_interval must be positive".into()));
        }
        if self.k0 == 0 || self.k0 > self.k_max {
            return Err(DqnError::Config(format!("need 1 <= k0 <= k_max, got {} and {}", self.k0, self.k_max)));
        }
        Ok(())
    }

    /// `(p, K)` at `step`.
    pub fn tick(&self, step: usize) -> (f64, usize) {
        if step >= self.limit {
            return (0.0, self.k_max);
        }
        let n = step / self.decay_interval;
        let p = (self.p0 * self.decay.powi(n.min(i32::MAX as usize) as i32)).clamp(0.0, 1.0);
        let k = (self.k0 + n).min(self.k_max);
        (p, k)
    }
}

pub fn schedule_tick(sched: &CurriculumSchedule, step: usize) -> (f64, usize) {
    sched.tick(step)
}

/// Applies the oracle's correct action to each unresolved reward-relevant
/// element independently with probability `p`. The goal is not touched.
pub fn warm_start<R: Rng + ?Sized>(task: &Task, p: f64, rng: &mut R) -> Result<Task, DqnError> {
    let mut state = task.initial.clone();
    for &id in &task.goal.relevant {
        if !rng.gen_bool(p.clamp(0.0, 1.0)) {
            continue;
        }
        if task.goal.is_resolved(&state, id) {
            continue;
        }
        let action = correct_action(task, &state, id)?;
        state = apply_action(&state, &task.instruction, action).tree;
    }
    let mut out = task.clone();
    out.initial = state;
    Ok(out)
}

/// Replaces the goal with the oracle's result on a uniformly drawn `k`-subset of
/// the relevant elements that are unresolved initially. The instruction keeps
/// only the fields the subset refers to (all fields if it refers to none).
pub fn simulate_subgoal<R: Rng + ?Sized>(task: &Task, k: usize, rng: &mut R) -> Result<Task, DqnError> {
    let open: Vec<_> = task
        .goal
        .relevant
        .iter()
        .copied()
        .filter(|&id| !task.goal.is_resolved(&task.initial, id))
        .collect();
    if k == 0 || k > task.goal.relevant.len() {
        return Err(DqnError::KOutOfRange {
            k,
            max: task.goal.relevant.len(),
        });
    }
    let k = k.min(open.len());
    let mut picked: Vec<usize> = sample(rng, open.len(), k).into_vec();
    picked.sort_unstable();
    let subset: Vec<_> = picked.iter().map(|&i| open[i]).collect();

    let mut goal = task.initial.clone();
    let mut used_fields = Vec::new();
    for &id in &subset {
        let action = correct_action(task, &goal, id)?;
        if let Some(f) = action.field_index {
            used_fields.push(f);
        }
        goal = apply_action(&goal, &task.instruction, action).tree;
    }
    used_fields.sort_unstable();
    used_fields.dedup();

    let mut out = task.clone();
    if !used_fields.is_empty() && used_fields.len() < task.instruction.len() {
        let fields = used_fields.iter().map(|&f| task.instruction.fields[f].clone()).collect();
        let instruction = Instruction::with_max(fields, task.instruction.len())?;
        out.instruction = instruction;
    }
    out.goal = Goal::new(goal, subset)?;
    Ok(out)
}
