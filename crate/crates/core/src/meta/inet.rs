use serde::{Deserialize, Serialize};

use crate::dom::{Attr, DomTree, ElementId};
use crate::nn::{BiLstm, Linear, NnError, ParamId, ParamStore, Tape, Var};
use crate::qweb::{sample_softmax, Vocab};
use crate::text::tokenize;

use super::InstructionGenAction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct InetConfig {
    pub embed_dim: usize,
    pub hidden: usize,
}

impl Default for InetConfig {
    fn default() -> Self {
        InetConfig {
            embed_dim: 32,
            hidden: 32,
        }
    }
}

/// Token ids of a goal page, in linearized element order.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedGoal {
    pub order: Vec<ElementId>,
    pub attr_tokens: Vec<Vec<Vec<usize>>>,
}

impl EncodedGoal {
    pub fn new(vocab: &Vocab, tree: &DomTree) -> Self {
        let order = tree.linearize().to_vec();
        let attr_tokens = order
            .iter()
            .map(|&id| {
                let el = tree.get(id).expect("linearized id exists");
                el.attrs
                    .iter()
                    .map(|(_, v)| vocab.encode_tokens(&tokenize(v)))
                    .filter(|t| !t.is_empty())
                    .collect()
            })
            .collect();
        EncodedGoal { order, attr_tokens }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Q values of one instruction-generation state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InetQ {
    /// One entry per goal element, in linearized order.
    pub q_elements: Vec<f64>,
    /// One entry per attribute, in [`Attr::ALL`] order.
    pub q_attributes: Vec<f64>,
    pub attention: Vec<f64>,
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

impl InetQ {
    pub fn composite(&self, element_pos: usize, attribute: Attr) -> f64 {
        self.q_elements[element_pos] + self.q_attributes[attribute.index()]
    }

    /// The composite argmax as `(element position, attribute)`.
    pub fn greedy(&self) -> (usize, Attr) {
        let a = argmax(&self.q_attributes);
        (argmax(&self.q_elements), Attr::ALL[a])
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, temperature: f64, rng: &mut R) -> (usize, Attr) {
        let e = sample_softmax(&self.q_elements, temperature, rng);
        let a = sample_softmax(&self.q_attributes, temperature, rng);
        (e, Attr::ALL[a])
    }
}

/// Tape handles of one forward pass.
#[derive(Clone, Copy, Debug)]
pub struct InetVars {
    /// `[1, elements]`.
    pub q_elements: Var,
    /// `[1, 6]`.
    pub q_attributes: Var,
    pub attention: Var,
}

impl InetVars {
    pub fn composite(&self, tape: &mut Tape, element_pos: usize, attribute: Attr) -> Var {
        let e = tape.pick(self.q_elements, element_pos);
        let a = tape.pick(self.q_attributes, attribute.index());
        tape.add(e, a)
    }
}

/// The instructor Q-network: key-element similarity plus attribute scores
/// from an attention-pooled page encoding.
#[derive(Clone, Debug)]
pub struct Inet {
    pub config: InetConfig,
    pub vocab: Vocab,
    embed: ParamId,
    key_fc: Linear,
    lstm: BiLstm,
    element_fc: Linear,
    attr_fc: Linear,
}

impl Inet {
    pub fn new(config: InetConfig, vocab: Vocab, store: &mut ParamStore) -> Result<Self, NnError> {
        let (d, h) = (config.embed_dim, config.hidden);
        Ok(Inet {
            embed: store.uniform("inet.embed", vec![vocab.len(), d], 0.1)?,
            key_fc: Linear::new(store, "inet.key_fc", d, h)?,
            lstm: BiLstm::new(store, "inet.lstm", d, h)?,
            element_fc: Linear::new(store, "inet.element_fc", 2 * h, h)?,
            attr_fc: Linear::new(store, "inet.attr_fc", 2 * h, Attr::ALL.len())?,
            config,
            vocab,
        })
    }

    pub fn encode_goal(&self, tree: &DomTree) -> EncodedGoal {
        EncodedGoal::new(&self.vocab, tree)
    }

    pub fn encode_key(&self, key: &str) -> Vec<usize> {
        self.vocab.encode(key)
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, goal: &EncodedGoal, key: &[usize]) -> Result<InetVars, NnError> {
        if goal.is_empty() {
            return Err(NnError::EmptySequence);
        }
        let k = tape.embed_bag(store, self.embed, &[key])?;
        let kz = self.key_fc.forward(tape, store, k);
        let key_vec = tape.relu(kz);
        let mut rows = Vec::with_capacity(goal.len());
        for groups in &goal.attr_tokens {
            rows.push(tape.embed_bag(store, self.embed, groups)?);
        }
        let xs = tape.stack(&rows);
        let hs = self.lstm.forward(tape, store, xs)?;
        let z = self.element_fc.forward(tape, store, hs);
        let reps = tape.tanh(z);
        let q_elements = tape.matmul_t(key_vec, reps);
        let attention = tape.softmax(q_elements);
        let pooled = tape.vecmat(attention, reps);
        let joint = tape.concat(&[pooled, key_vec]);
        let q_attributes = self.attr_fc.forward(tape, store, joint);
        Ok(InetVars {
            q_elements,
            q_attributes,
            attention,
        })
    }

    pub fn q_values(&self, tape: &mut Tape, store: &ParamStore, goal: &EncodedGoal, key: &[usize]) -> Result<InetQ, NnError> {
        tape.clear();
        let v = self.forward(tape, store, goal, key)?;
        Ok(InetQ {
            q_elements: tape.value(v.q_elements).to_vec(),
            q_attributes: tape.value(v.q_attributes).to_vec(),
            attention: tape.value(v.attention).to_vec(),
        })
    }

    /// Greedy action for `key` on `goal`.
    pub fn greedy_action(&self, tape: &mut Tape, store: &ParamStore, goal: &EncodedGoal, key: &str) -> Result<InstructionGenAction, NnError> {
        let q = self.q_values(tape, store, goal, &self.encode_key(key))?;
        let (pos, attribute) = q.greedy();
        Ok(InstructionGenAction {
            element: goal.order[pos],
            attribute,
        })
    }

    /// Greedy `(key, value)` pairs for `keys`, in order.
    pub fn decode(&self, store: &ParamStore, tree: &DomTree, keys: &[String]) -> Result<Vec<(String, String)>, NnError> {
        let goal = self.encode_goal(tree);
        let mut tape = Tape::new();
        keys.iter()
            .map(|k| {
                let a = self.greedy_action(&mut tape, store, &goal, k)?;
                let v = tree.get(a.element).map(|e| e.attr(a.attribute).to_string()).unwrap_or_default();
                Ok((k.clone(), v))
            })
            .collect()
    }
}

/// `inet_q` as a free function: `(q_elements, q_attributes)`.
pub fn inet_q(net: &Inet, store: &ParamStore, goal: &DomTree, key: &str) -> Result<(Vec<f64>, Vec<f64>), NnError> {
    let q = net.q_values(&mut Tape::new(), store, &net.encode_goal(goal), &net.encode_key(key))?;
    Ok((q.q_elements, q.q_attributes))
}
