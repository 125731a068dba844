//! Potential-based reward augmentation and episode statistics.

use crate::dom::{match_count, DomError, DomTree, Goal};

use super::{EnvError, StepOutcome};

/// Fraction of reward-relevant goal elements matched by `state`.
pub fn potential(state: &DomTree, goal: &Goal) -> Result<f64, DomError> {
    if goal.relevant.is_empty() {
        return Ok(0.0);
    }
    Ok(match_count(state, goal)? as f64 / goal.relevant.len() as f64)
}

/// `gamma * (potential(next) - potential(prev))`.
pub fn shaped_reward(prev: &DomTree, next: &DomTree, goal: &Goal, gamma: f64) -> Result<f64, DomError> {
    let before = match_count(prev, goal)?;
    let after = match_count(next, goal)?;
    if before == after {
        return Ok(0.0);
    }
    let n = goal.relevant.len() as f64;
    Ok(gamma * (after as f64 / n - before as f64 / n))
}

/// Fraction of terminal outcomes that succeeded.
pub fn success_rate(outcomes: &[StepOutcome]) -> Result<f64, EnvError> {
    if outcomes.is_empty() {
        return Err(EnvError::EmptyOutcomes);
    }
    let mut wins = 0usize;
    for (i, o) in outcomes.iter().enumerate() {
        match (o.done, o.success) {
            (true, Some(s)) => wins += s as usize,
            _ => return Err(EnvError::NotTerminal(i)),
        }
    }
    Ok(wins as f64 / outcomes.len() as f64)
}
