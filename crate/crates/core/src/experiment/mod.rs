//! Experiment runner: JSON configs, seeded training with metrics and
//! checkpoints, evaluation, curve export and corpus generation.
//!
//! A run directory holds `config.json`, `metrics.jsonl` (a header line
//! followed by one row per evaluation), `checkpoint/` with the latest
//! parameters and, for meta-training, `inet/` and `inet_report.json`.

mod config;
mod eval;
mod export;
mod tools;
mod train;

pub use config::{ExperimentConfig, MetaSettings, Variant};
pub use eval::{cmd_eval, load_qweb, oracle_success, CheckpointInfo, EvalSummary};
pub use export::{cmd_export, find_metrics};
pub use tools::{gen_corpus, inspect_env, list_envs, to_jsonl};
pub use train::{
    cmd_train, output_root, parse_metrics, pretrain_inet, qweb_checkpoint_meta, read_metrics, resolve_out_dir,
    MetricsHeader, MetricsRow, TrainSummary, CHECKPOINT_DIR, CONFIG_FILE, INET_DIR, INET_REPORT_FILE, METRICS_FILE,
    TARGET_DIR,
};

use crate::dqn::DqnError;
use crate::env::EnvError;
use crate::meta::MetaError;
use crate::nn::NnError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("non-finite loss at step {step}: {detail}")]
    NonFinite { step: usize, detail: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Dqn(#[from] DqnError),
    #[error(transparent)]
    Meta(#[from] MetaError),
}
