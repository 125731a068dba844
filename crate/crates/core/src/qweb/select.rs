use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dom::ElementId;
use crate::env::{CompositeAction, Verb};

/// Head outputs for one state, indexed by leaf position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QValues {
    pub q_dom: Vec<f64>,
    pub q_click_type: Vec<[f64; 2]>,
    pub q_type: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectMode {
    Greedy,
    Categorical,
}

/// An action expressed by leaf position rather than element id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LeafAction {
    pub leaf: usize,
    pub verb: Verb,
    pub field: Option<usize>,
}

impl LeafAction {
    pub fn to_action(self, leaf_ids: &[ElementId]) -> CompositeAction {
        CompositeAction {
            element: leaf_ids[self.leaf],
            verb: self.verb,
            field_index: self.field,
        }
    }
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

/// Samples an index from `softmax(logits / temperature)`.
pub fn sample_softmax<R: Rng + ?Sized>(logits: &[f64], temperature: f64, rng: &mut R) -> usize {
    let t = temperature.max(1e-6);
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|&l| ((l - m) / t).exp()).collect();
    let z: f64 = w.iter().sum();
    let mut u = rng.gen::<f64>() * z;
    for (i, &wi) in w.iter().enumerate() {
        if u < wi {
            return i;
        }
        u -= wi;
    }
    w.len() - 1
}

impl QValues {
    pub fn new(q_dom: Vec<f64>, q_click_type: Vec<[f64; 2]>, q_type: Vec<Vec<f64>>) -> Self {
        QValues {
            q_dom,
            q_click_type,
            q_type,
        }
    }

    pub fn leaves(&self) -> usize {
        self.q_dom.len()
    }

    pub fn fields(&self) -> usize {
        self.q_type.first().map_or(0, Vec::len)
    }

    pub fn is_finite(&self) -> bool {
        self.q_dom.iter().all(|v| v.is_finite())
            && self.q_click_type.iter().flatten().all(|v| v.is_finite())
            && self.q_type.iter().flatten().all(|v| v.is_finite())
    }

    /// `q_dom[e] + q_click_type[e][c] (+ q_type[e][f] for type)`.
    pub fn composite(&self, a: LeafAction) -> f64 {
        let base = self.q_dom[a.leaf] + self.q_click_type[a.leaf][a.verb.index()];
        match (a.verb, a.field) {
            (Verb::Type, Some(f)) => base + self.q_type[a.leaf][f],
            _ => base,
        }
    }

    /// Best composite value reachable through each verb of `leaf`:
    /// `[click, type with its best field]`.
    pub fn verb_values(&self, leaf: usize) -> [f64; 2] {
        let [c, t] = self.q_click_type[leaf];
        let best_field = self.q_type[leaf].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        [c, t + best_field]
    }

    /// Best composite value reachable through each leaf.
    pub fn leaf_values(&self) -> Vec<f64> {
        (0..self.leaves())
            .map(|e| {
                let [c, t] = self.verb_values(e);
                self.q_dom[e] + c.max(t)
            })
            .collect()
    }

    /// Largest composite value over all (element, verb, field).
    pub fn max_composite(&self) -> f64 {
        self.leaf_values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Hierarchical argmax: element, then verb (click on ties), then field.
    /// Each level scores a choice by the best composite value below it, so the
    /// result maximizes the composite Q. Ties go to the lowest index.
    pub fn greedy(&self) -> LeafAction {
        let leaf = argmax(&self.leaf_values());
        let [c, t] = self.verb_values(leaf);
        if t > c && self.fields() > 0 {
            LeafAction {
                leaf,
                verb: Verb::Type,
                field: Some(argmax(&self.q_type[leaf])),
            }
        } else {
            LeafAction {
                leaf,
                verb: Verb::Click,
                field: None,
            }
        }
    }

    /// Samples each level from a tempered softmax over the same scores
    /// [`greedy`](Self::greedy) maximizes.
    pub fn sample<R: Rng + ?Sized>(&self, temperature: f64, rng: &mut R) -> LeafAction {
        let leaf = sample_softmax(&self.leaf_values(), temperature, rng);
        let verb = if self.fields() == 0 {
            0
        } else {
            sample_softmax(&self.verb_values(leaf), temperature, rng)
        };
        if verb == 1 {
            LeafAction {
                leaf,
                verb: Verb::Type,
                field: Some(sample_softmax(&self.q_type[leaf], temperature, rng)),
            }
        } else {
            LeafAction {
                leaf,
                verb: Verb::Click,
                field: None,
            }
        }
    }

    pub fn select<R: Rng + ?Sized>(&self, mode: SelectMode, temperature: f64, rng: &mut R) -> LeafAction {
        match mode {
            SelectMode::Greedy => self.greedy(),
            SelectMode::Categorical => self.sample(temperature, rng),
        }
    }
}

/// Picks an action over the leaves listed in `leaf_ids` (linearized order).
pub fn select_action<R: Rng + ?Sized>(
    qv: &QValues,
    leaf_ids: &[ElementId],
    mode: SelectMode,
    temperature: f64,
    rng: &mut R,
) -> CompositeAction {
    qv.select(mode, temperature, rng).to_action(leaf_ids)
}
