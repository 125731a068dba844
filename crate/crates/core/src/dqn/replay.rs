use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dom::{DomTree, Instruction};
use crate::env::CompositeAction;
use crate::qweb::{EncodedState, LeafAction};

use super::DqnError;

#[derive(Clone, Debug)]
pub struct Transition {
    pub instruction: Arc<Instruction>,
    pub state: Arc<DomTree>,
    pub action: CompositeAction,
    pub next_state: Arc<DomTree>,
    pub reward: f64,
    pub done: bool,
    /// Network inputs for `state` and `next_state`, when an encoder was used.
    pub encoded: Option<(Arc<EncodedState>, Arc<EncodedState>)>,
    pub leaf_action: Option<LeafAction>,
}

/// Fixed-capacity ring buffer with oldest-first eviction.
#[derive(Clone, Debug)]
pub struct ReplayBuffer<T = Transition> {
    capacity: usize,
    items: Vec<T>,
    next: usize,
    rng: ChaCha8Rng,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize, rng_seed: u64) -> Self {
        ReplayBuffer {
            capacity: capacity.max(1),
            items: Vec::new(),
            next: 0,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: T) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Stored transitions, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// `n` distinct transitions drawn uniformly.
    pub fn sample(&mut self, n: usize) -> Result<Vec<&T>, DqnError> {
        if self.items.is_empty() {
            return Err(DqnError::EmptyBuffer);
        }
        if n > self.items.len() {
            return Err(DqnError::BatchTooLarge {
                batch: n,
                size: self.items.len(),
            });
        }
        let idx = sample(&mut self.rng, self.items.len(), n);
        Ok(idx.iter().map(|i| &self.items[i]).collect())
    }
}
