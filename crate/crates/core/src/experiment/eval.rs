use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dqn::{evaluate, rollout, OraclePolicy};
use crate::env::{EpisodeConfig, SuiteScale, WebEnv};
use crate::nn::{checkpoint, ParamStore};
use crate::qweb::{QWebConfig, QWebNet, Vocab};

use super::ExperimentError;

/// What a QWeb checkpoint says about itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointInfo {
    pub qweb: QWebConfig,
    pub vocab: Vocab,
    pub env: String,
    #[serde(default)]
    pub scale: SuiteScale,
    #[serde(default)]
    pub step: usize,
    #[serde(default)]
    pub train_steps: usize,
}

/// Rebuilds the network stored in a checkpoint directory.
pub fn load_qweb(dir: &Path) -> Result<(QWebNet, ParamStore, CheckpointInfo), ExperimentError> {
    let manifest = checkpoint::read_manifest(dir)?;
    let info: CheckpointInfo = serde_json::from_value(manifest.meta)
        .map_err(|e| ExperimentError::Checkpoint(format!("{}: {e}", dir.display())))?;
    let mut params = ParamStore::new(0);
    let net = QWebNet::new(info.qweb, info.vocab.clone(), &mut params)?;
    checkpoint::load_into(dir, &mut params)?;
    Ok((net, params, info))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub env: String,
    pub episodes: usize,
    pub seed: u64,
    pub policy: String,
    pub checkpoint: Option<String>,
    pub success_rate: f64,
}

/// Success rate of the scripted oracle over `episodes` seeded tasks.
pub fn oracle_success(env_name: &str, scale: &SuiteScale, episodes: usize, seed: u64) -> Result<f64, ExperimentError> {
    let mut env = WebEnv::with_scale(env_name, EpisodeConfig::default().with_seed(seed), scale.clone())?;
    let mut wins = 0;
    for _ in 0..episodes {
        let task = env.sample_task();
        wins += rollout(&mut OraclePolicy, &mut env, task, None)?.success() as usize;
    }
    Ok(wins as f64 / episodes as f64)
}

/// Greedy evaluation of a checkpoint (or of the oracle) on `env`.
pub fn cmd_eval(
    ckpt: Option<&Path>,
    env: &str,
    episodes: usize,
    seed: u64,
    oracle: bool,
) -> Result<EvalSummary, ExperimentError> {
    if episodes == 0 {
        return Err(ExperimentError::Config("evaluation needs at least one episode".into()));
    }
    let (policy, checkpoint, success_rate) = if oracle {
        let scale = match ckpt {
            Some(dir) => load_qweb(dir)?.2.scale,
            None => SuiteScale::default(),
        };
        ("oracle", ckpt, oracle_success(env, &scale, episodes, seed)?)
    } else {
        let dir = ckpt.ok_or_else(|| ExperimentError::Config("a checkpoint is required unless --oracle is set".into()))?;
        let (net, params, info) = load_qweb(dir)?;
        let rate = evaluate(&net, &params, env, &info.scale, &EpisodeConfig::default(), episodes, seed)?;
        ("qweb", Some(dir), rate)
    };
    Ok(EvalSummary {
        env: env.to_string(),
        episodes,
        seed,
        policy: policy.into(),
        checkpoint: checkpoint.map(|p| p.display().to_string()),
        success_rate,
    })
}
