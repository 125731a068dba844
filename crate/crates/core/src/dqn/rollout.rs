use std::sync::Arc;

use rand::Rng;

use crate::dom::DomTree;
use crate::env::{oracle_action, CompositeAction, StepOutcome, Task, Verb, WebEnv};
use crate::nn::{ParamStore, Tape};
use crate::qweb::{EncodedInstruction, EncodedState, LeafAction, QWebNet, SelectMode, Vocab};

use super::replay::Transition;
use super::DqnError;

pub trait Policy {
    /// Chooses the next action. `encoded` is present when the rollout encodes states.
    fn act(
        &mut self,
        task: &Task,
        state: &DomTree,
        encoded: Option<&EncodedState>,
    ) -> Result<(CompositeAction, Option<LeafAction>), DqnError>;
}

/// Always takes the scripted oracle's next action.
#[derive(Clone, Copy, Debug, Default)]
pub struct OraclePolicy;

impl Policy for OraclePolicy {
    fn act(
        &mut self,
        task: &Task,
        state: &DomTree,
        _: Option<&EncodedState>,
    ) -> Result<(CompositeAction, Option<LeafAction>), DqnError> {
        Ok((oracle_action(task, state, None)?, None))
    }
}

/// Uniform over leaves, verbs and fields.
pub struct RandomPolicy<R: Rng> {
    pub rng: R,
}

impl<R: Rng> Policy for RandomPolicy<R> {
    fn act(
        &mut self,
        task: &Task,
        state: &DomTree,
        _: Option<&EncodedState>,
    ) -> Result<(CompositeAction, Option<LeafAction>), DqnError> {
        let leaves = state.leaf_elements();
        let el = leaves[self.rng.gen_range(0..leaves.len())];
        if self.rng.gen_bool(0.5) {
            Ok((CompositeAction::click(el), None))
        } else {
            let f = self.rng.gen_range(0..task.instruction.len());
            Ok((CompositeAction::type_field(el, f), None))
        }
    }
}

/// Acts from QWeb's Q values.
pub struct QWebPolicy<'a, R: Rng> {
    pub net: &'a QWebNet,
    pub params: &'a ParamStore,
    pub mode: SelectMode,
    pub temperature: f64,
    pub rng: &'a mut R,
    pub tape: Tape,
}

impl<'a, R: Rng> QWebPolicy<'a, R> {
    pub fn new(net: &'a QWebNet, params: &'a ParamStore, mode: SelectMode, temperature: f64, rng: &'a mut R) -> Self {
        QWebPolicy {
            net,
            params,
            mode,
            temperature,
            rng,
            tape: Tape::new(),
        }
    }
}

impl<R: Rng> Policy for QWebPolicy<'_, R> {
    fn act(
        &mut self,
        task: &Task,
        state: &DomTree,
        encoded: Option<&EncodedState>,
    ) -> Result<(CompositeAction, Option<LeafAction>), DqnError> {
        let owned;
        let enc = match encoded {
            Some(e) => e,
            None => {
                owned = self.net.encode(&task.instruction, state);
                &owned
            }
        };
        let qv = self.net.q_values_with(&mut self.tape, self.params, enc)?;
        if !qv.is_finite() {
            return Err(DqnError::NonFinite("Q values".into()));
        }
        let la = qv.select(self.mode, self.temperature, self.rng);
        Ok((la.to_action(&enc.leaf_ids), Some(la)))
    }
}

/// One finished (or capped) episode.
#[derive(Clone, Debug)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    pub outcomes: Vec<StepOutcome>,
}

impl Episode {
    pub fn success(&self) -> bool {
        self.outcomes.last().and_then(|o| o.success).unwrap_or(false)
    }

    pub fn total_reward(&self) -> f64 {
        self.outcomes.iter().map(|o| o.reward).sum()
    }
}

/// Runs `policy` on `task` until the episode ends. States are encoded with
/// `vocab` when given.
pub fn rollout<P: Policy + ?Sized>(
    policy: &mut P,
    env: &mut WebEnv,
    task: Task,
    vocab: Option<&Vocab>,
) -> Result<Episode, DqnError> {
    let task = env.start(task).clone();
    let instruction = Arc::new(task.instruction.clone());
    let enc_ins = vocab.map(|v| EncodedInstruction::new(v, &task.instruction));
    let encode = |tree: &DomTree| -> Option<Arc<EncodedState>> {
        match (vocab, &enc_ins) {
            (Some(v), Some(ei)) => Some(Arc::new(EncodedState::with_instruction(v, ei.clone(), tree))),
            _ => None,
        }
    };
    let mut state = Arc::new(task.initial.clone());
    let mut enc = encode(&state);
    let mut transitions = Vec::new();
    let mut outcomes = Vec::new();
    loop {
        let (action, leaf_action) = policy.act(&task, &state, enc.as_deref())?;
        let outcome = env.step(action)?;
        let next = Arc::new(outcome.next_state.clone());
        let next_enc = if outcome.done { enc.clone() } else { encode(&next) };
        let leaf_action = leaf_action.or_else(|| {
            enc.as_ref().and_then(|e| {
                e.leaf_index(action.element).map(|leaf| LeafAction {
                    leaf,
                    verb: action.verb,
                    field: if action.verb == Verb::Type { action.field_index } else { None },
                })
            })
        });
        transitions.push(Transition {
            instruction: instruction.clone(),
            state: state.clone(),
            action,
            next_state: next.clone(),
            reward: outcome.reward,
            done: outcome.done,
            encoded: enc.clone().zip(next_enc.clone()),
            leaf_action,
        });
        let done = outcome.done;
        outcomes.push(outcome);
        if done {
            break;
        }
        state = next;
        enc = next_enc;
    }
    Ok(Episode { transitions, outcomes })
}
