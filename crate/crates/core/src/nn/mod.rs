//! Reverse-mode differentiation, parameters, optimizers and checkpoints.
//!
//! Values are `f64` in memory; checkpoints store `f32`.

pub mod checkpoint;
mod lstm;
mod optim;
mod tape;
mod tensor;

pub use lstm::{bilstm, BiLstm, Lstm};
pub use optim::{adam_step, sgd_step, Adam, Optimizer};
pub use tape::{Tape, Var};
pub use tensor::{Grads, ParamId, ParamStore, Tensor};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("id {id} out of range for table {table} with {rows} rows")]
    IdOutOfRange { table: String, id: usize, rows: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("duplicate parameter {0}")]
    DuplicateParam(String),
    #[error("non-finite gradient for parameter {0}")]
    NonFiniteGradient(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Affine layer `W x + b` with `W` shaped `[out, in]`.
#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    pub fn new(store: &mut ParamStore, prefix: &str, input: usize, output: usize) -> Result<Self, NnError> {
        Ok(Linear {
            w: store.fan_in(&format!("{prefix}.w"), output, input)?,
            b: store.zeros(&format!("{prefix}.b"), vec![output])?,
            input,
            output,
        })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Var {
        tape.affine(store, self.w, Some(self.b), x)
    }
}
