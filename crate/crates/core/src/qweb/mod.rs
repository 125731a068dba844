//! The navigator Q-network.
//!
//! Fields are encoded from key and value embeddings; each DOM element is
//! encoded from its attribute embeddings and the attention-weighted overlap
//! with the instruction, then passed through a biLSTM in linearized order.
//! The leaf-by-field similarity matrix `M` feeds three heads whose sum is the
//! composite Q value. Optional shallow string features are gated into the
//! element and type heads.

mod encode;
mod net;
mod select;
mod vocab;

pub use encode::{shallow_features, EncodedInstruction, EncodedState, ShallowFeatures, SHALLOW_DIM};
pub use net::{gate, QVars, QWebConfig, QWebNet};
pub use select::{sample_softmax, select_action, LeafAction, QValues, SelectMode};
pub use vocab::{Vocab, UNK, UNK_TOKEN};
