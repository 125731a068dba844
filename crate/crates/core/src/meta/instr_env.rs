use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dom::{Attr, DomTree, ElementId, Field, Instruction};
use crate::env::Task;

use super::MetaError;

/// Instruction-generation state: the goal page, the key being filled and the
/// keys still to come.
#[derive(Clone, Debug, PartialEq)]
pub struct InstructionGenState {
    pub goal: Arc<DomTree>,
    pub current_key: String,
    pub remaining_keys: Vec<String>,
    /// `(key, value)` pairs produced so far, in generation order.
    pub produced: Vec<(String, String)>,
}

impl InstructionGenState {
    /// Starts an episode that fills `keys` in the given order.
    pub fn new(goal: Arc<DomTree>, keys: Vec<String>) -> Result<Self, MetaError> {
        let mut seen = std::collections::BTreeSet::new();
        for k in &keys {
            if !seen.insert(k.as_str()) {
                return Err(MetaError::DuplicateKey(k.clone()));
            }
        }
        let mut queue = keys.into_iter();
        let current_key = queue.next().ok_or(MetaError::NoKeys)?;
        Ok(InstructionGenState {
            goal,
            current_key,
            remaining_keys: queue.collect(),
            produced: Vec::new(),
        })
    }

    /// The produced pairs as an instruction, if they form a valid one.
    pub fn instruction(&self) -> Result<Instruction, MetaError> {
        produced_instruction(&self.produced)
    }
}

pub fn produced_instruction(pairs: &[(String, String)]) -> Result<Instruction, MetaError> {
    let fields = pairs
        .iter()
        .map(|(k, v)| Field::new(k.clone(), v.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let n = fields.len();
    Ok(Instruction::with_max(fields, n.max(1))?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstructionGenAction {
    pub element: ElementId,
    pub attribute: Attr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstrStep {
    /// `None` once every key has been filled.
    pub next: Option<InstructionGenState>,
    pub reward: f64,
    pub done: bool,
    /// The copied value (empty for an invalid element).
    pub value: String,
}

/// The value `action` copies out of `goal`; `None` for an unknown element.
pub fn copied_value(goal: &DomTree, action: InstructionGenAction) -> Option<&str> {
    goal.get(action.element).map(|e| e.attr(action.attribute))
}

/// Copies an attribute value for the current key. The reward is +1 when it
/// equals the key's value in `truth` and −1 otherwise.
pub fn instr_env_step(state: &InstructionGenState, action: InstructionGenAction, truth: &Instruction) -> InstrStep {
    let value = copied_value(&state.goal, action).map(str::to_string);
    let correct = match (&value, truth.value_of(&state.current_key)) {
        (Some(v), Some(t)) => v == t,
        _ => false,
    };
    let value = value.unwrap_or_default();
    let mut produced = state.produced.clone();
    produced.push((state.current_key.clone(), value.clone()));
    let next = state.remaining_keys.split_first().map(|(k, rest)| InstructionGenState {
        goal: state.goal.clone(),
        current_key: k.clone(),
        remaining_keys: rest.to_vec(),
        produced,
    });
    InstrStep {
        done: next.is_none(),
        next,
        reward: if correct { 1.0 } else { -1.0 },
        value,
    }
}

/// True iff both instructions have the same keys and every value matches.
pub fn instruction_success(produced: &Instruction, truth: &Instruction) -> bool {
    let a: BTreeMap<&str, &str> = produced.fields.iter().map(|f| (f.key.as_str(), f.value.as_str())).collect();
    let b: BTreeMap<&str, &str> = truth.fields.iter().map(|f| (f.key.as_str(), f.value.as_str())).collect();
    a.len() == produced.len() && a == b
}

/// For each instruction key of `task`, the reward-relevant element and
/// attribute whose goal value spells the key's value. Keys with equal values
/// get distinct elements when the page has enough of them.
pub fn key_elements(task: &Task) -> Vec<(String, Option<InstructionGenAction>)> {
    let mut used = Vec::new();
    task.instruction
        .fields
        .iter()
        .map(|f| {
            let candidates = |ids: &[ElementId]| -> Vec<InstructionGenAction> {
                ids.iter()
                    .filter_map(|&id| {
                        let el = task.goal.tree.get(id)?;
                        Attr::ALL
                            .into_iter()
                            .find(|&a| el.attr(a) == f.value)
                            .map(|attribute| InstructionGenAction { element: id, attribute })
                    })
                    .collect()
            };
            let mut all = candidates(&task.goal.relevant);
            all.extend(candidates(task.goal.tree.linearize()));
            let hit = all.iter().find(|a| !used.contains(&a.element)).or(all.first()).copied();
            if let Some(a) = hit {
                used.push(a.element);
            }
            (f.key.clone(), hit)
        })
        .collect()
}
