//! Meta-training: an instruction-generation environment, the INET
//! instructor network, the RRND goal generator and the MetaQWeb loop that
//! trains the navigator on synthesized tasks.

mod inet;
mod instr_env;
mod rrnd;
mod train;

pub use inet::{inet_q, EncodedGoal, Inet, InetConfig, InetQ, InetVars};
pub use instr_env::{
    copied_value, instr_env_step, instruction_success, key_elements, produced_instruction, InstrStep,
    InstructionGenAction, InstructionGenState,
};
pub use rrnd::{rrnd, GoalPath};
pub use train::{
    consistent, evaluate_inet, generate_corpus, generate_task, inet_loss_and_grad, meta_test, CorpusRecord,
    Generated, InetEpisode, InetInstructor, InetReport, InetTrainConfig, InetTrainer, InetTransition, Instructor,
    MetaQWeb, MetaStats, OracleInstructor,
};

use crate::dom::DomError;
use crate::dqn::DqnError;
use crate::env::EnvError;
use crate::nn::NnError;

#[derive(Debug, thiserror::Error)]
pub enum MetaError {
    #[error("instruction generation needs at least one key")]
    NoKeys,
    #[error("duplicate key {0}")]
    DuplicateKey(String),
    #[error("knowledge source is empty but the page has text inputs")]
    EmptyKnowledgeSource,
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Dom(#[from] DomError),
    #[error(transparent)]
    Nn(NnError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Dqn(#[from] DqnError),
}
