//! Guided deep Q-learning for instruction-following web navigation.
//!
//! The crate is organized bottom-up:
//!
//! - [`dom`] and [`text`]: the DOM-tree model, linearization, tokenization
//!   and goal comparison.
//! - [`env`]: episodic environments with composite click/type actions, a
//!   scripted oracle, and potential-based reward shaping.
//! - [`nn`]: a small reverse-mode autodiff core (tape, LSTM, optimizers,
//!   checkpoints).
//! - [`qweb`]: the navigator Q-network and hierarchical action selection.
//! - [`dqn`]: replay-buffer DQN, curriculum schedules and evaluation.
//! - [`meta`]: instruction generation (INET), the randomized goal policy and
//!   meta-training of the navigator.
//! - [`experiment`]: configs, training/eval runners and metric export used
//!   by the `qweblab` binary.

pub mod dom;
pub mod dqn;
pub mod env;
pub mod experiment;
pub mod meta;
pub mod nn;
pub mod qweb;
pub mod text;
