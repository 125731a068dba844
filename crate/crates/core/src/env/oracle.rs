//! Scripted expert that knows the goal.

use crate::dom::{DomTree, ElementId};

use super::semantics::{apply_action, is_active, is_text_input};
use super::{CompositeAction, EnvError, Task};

/// The action that makes relevant element `id` agree with the goal.
pub fn correct_action(task: &Task, state: &DomTree, id: ElementId) -> Result<CompositeAction, EnvError> {
    let goal_el = task.goal.tree.get(id).ok_or(EnvError::NoOracleAction(id))?;
    let el = state.get(id).ok_or(EnvError::NoOracleAction(id))?;
    if is_text_input(el) {
        let wanted = goal_el.attr(crate::dom::Attr::Value);
        return task
            .instruction
            .index_of_value(wanted)
            .map(|f| CompositeAction::type_field(id, f))
            .ok_or(EnvError::NoOracleAction(id));
    }
    if el.group.is_some() {
        // Clicking the member the goal has active fixes the whole group.
        return state
            .group_members(id)
            .into_iter()
            .find(|&m| task.goal.tree.get(m).is_some_and(is_active))
            .map(CompositeAction::click)
            .ok_or(EnvError::NoOracleAction(id));
    }
    Ok(CompositeAction::click(id))
}

/// Expert action for `target`, or for the first unresolved relevant element
/// in linearization order; once everything matches, a terminal click that
/// keeps the goal satisfied.
pub fn oracle_action(
    task: &Task,
    state: &DomTree,
    target: Option<ElementId>,
) -> Result<CompositeAction, EnvError> {
    if let Some(e) = target {
        let relevant = task.is_relevant(e);
        if !relevant && !task.is_terminal(e) {
            return Err(EnvError::NotATarget(e));
        }
        if relevant && !task.goal.is_resolved(state, e) {
            return correct_action(task, state, e);
        }
        if task.is_terminal(e) {
            return Ok(CompositeAction::click(e));
        }
        return Err(EnvError::AlreadyResolved(e));
    }

    let order = state.linearize();
    if let Some(&e) = order
        .iter()
        .find(|&&e| task.is_relevant(e) && !task.goal.is_resolved(state, e))
    {
        return correct_action(task, state, e);
    }
    for &e in order.iter().filter(|&&e| task.is_terminal(e)) {
        let next = apply_action(state, &task.instruction, CompositeAction::click(e));
        if task.goal.is_satisfied(&next.tree)? {
            return Ok(CompositeAction::click(e));
        }
    }
    Err(EnvError::NoOracleAction(state.root()))
}
