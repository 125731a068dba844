use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dom::{DomTree, Field, Instruction};
use crate::env::{apply_action, is_text_input, CompositeAction};

use super::MetaError;

/// The pages and actions of one RRND run; the last page is the goal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalPath {
    /// `(page after the action, action)` in execution order.
    pub steps: Vec<(DomTree, CompositeAction)>,
    /// Typed values, one field each (`None` when nothing was typed). Type
    /// actions in `steps` index into it.
    pub instruction: Option<Instruction>,
}

impl GoalPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn goal(&self) -> Option<&DomTree> {
        self.steps.last().map(|(t, _)| t)
    }
}

/// Rule-based random goal generator. Visits every leaf once in linearized
/// order: text inputs get a uniformly drawn knowledge-source entry, each
/// group gets one uniformly chosen member clicked, and every other leaf is
/// clicked.
pub fn rrnd(initial: &DomTree, knowledge_source: &[String], seed: u64) -> Result<(DomTree, GoalPath), MetaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planned: Vec<(u32, Option<String>)> = Vec::new();
    let mut groups_done = BTreeSet::new();
    for id in initial.leaf_elements() {
        let el = initial.get(id).expect("leaf exists");
        if let Some(g) = el.group {
            let parent = initial.parent(id);
            if !groups_done.insert((parent, g)) {
                continue;
            }
            let members = initial.group_members(id);
            planned.push((*members.choose(&mut rng).expect("group has a member"), None));
        } else if is_text_input(el) {
            let v = knowledge_source.choose(&mut rng).ok_or(MetaError::EmptyKnowledgeSource)?;
            planned.push((id, Some(v.clone())));
        } else {
            planned.push((id, None));
        }
    }

    let mut values: Vec<&String> = Vec::new();
    for v in planned.iter().filter_map(|(_, v)| v.as_ref()) {
        if !values.contains(&v) {
            values.push(v);
        }
    }
    let instruction = if values.is_empty() {
        None
    } else {
        let fields = values
            .iter()
            .enumerate()
            .map(|(i, v)| Field::new(format!("v{i}"), v.as_str()))
            .collect::<Result<Vec<_>, _>>()?;
        let n = fields.len();
        Some(Instruction::with_max(fields, n)?)
    };
    let empty = Instruction { fields: Vec::new() };
    let path_instr = instruction.as_ref().unwrap_or(&empty);

    let mut tree = initial.clone();
    let mut steps = Vec::with_capacity(planned.len());
    for (id, value) in &planned {
        let action = match value {
            Some(v) => CompositeAction::type_field(*id, path_instr.index_of_value(v).expect("value was registered")),
            None => CompositeAction::click(*id),
        };
        tree = apply_action(&tree, path_instr, action).tree;
        steps.push((tree.clone(), action));
    }
    Ok((tree, GoalPath { steps, instruction }))
}
