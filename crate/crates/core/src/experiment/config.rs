use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dqn::{CurriculumMode, CurriculumSchedule, DqnConfig};
use crate::env::{EnvKind, EpisodeConfig, SuiteScale};
use crate::meta::{InetConfig, InetTrainConfig};
use crate::qweb::QWebConfig;

use super::ExperimentError;

/// Ablation switches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Variant {
    pub shallow_encoding: bool,
    pub augmented_reward: bool,
    pub curriculum_warm_start: bool,
    pub curriculum_goal_sim: bool,
    pub meta_training: bool,
}

impl Variant {
    /// Short label such as `SE+AR`, or `plain`.
    pub fn label(&self) -> String {
        let parts: Vec<&str> = [
            (self.shallow_encoding, "SE"),
            (self.augmented_reward, "AR"),
            (self.curriculum_warm_start, "CI"),
            (self.curriculum_goal_sim, "CG"),
            (self.meta_training, "META"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, s)| *s)
        .collect();
        if parts.is_empty() {
            "plain".into()
        } else {
            parts.join("+")
        }
    }

    pub fn curriculum_mode(&self) -> CurriculumMode {
        if self.curriculum_warm_start {
            CurriculumMode::WarmStart
        } else if self.curriculum_goal_sim {
            CurriculumMode::GoalSim
        } else {
            CurriculumMode::Off
        }
    }
}

/// Meta-training settings: INET size and pretraining budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaSettings {
    pub inet: InetConfig,
    pub train: InetTrainConfig,
    /// Goals used to pretrain INET.
    pub pretrain_goals: usize,
    /// Held-out goals for the INET report.
    pub eval_goals: usize,
}

impl Default for MetaSettings {
    fn default() -> Self {
        MetaSettings {
            inet: InetConfig::default(),
            train: InetTrainConfig::default(),
            pretrain_goals: 2000,
            eval_goals: 1000,
        }
    }
}

/// Everything one training run needs. Every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub env: String,
    pub scale: SuiteScale,
    pub variant: Variant,
    /// Curriculum parameters; the mode comes from `variant`.
    pub schedule: CurriculumSchedule,
    pub network: QWebConfig,
    pub dqn: DqnConfig,
    /// Step cap and penalty; shaping and seed are set by the runner.
    pub episode: EpisodeConfig,
    pub meta: MetaSettings,
    pub seed: u64,
    /// Environment steps to train for.
    pub steps: usize,
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Stop once an evaluation reaches this success rate.
    pub early_stop: Option<f64>,
    pub checkpoints: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "run".into(),
            env: "click-dialog".into(),
            scale: SuiteScale::default(),
            variant: Variant::default(),
            schedule: CurriculumSchedule::default(),
            network: QWebConfig::default(),
            dqn: DqnConfig::default(),
            episode: EpisodeConfig::default(),
            meta: MetaSettings::default(),
            seed: 0,
            steps: 50_000,
            eval_every: 2_500,
            eval_episodes: 100,
            early_stop: None,
            checkpoints: true,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        EnvKind::parse(&self.env).map_err(|e| ExperimentError::Config(e.to_string()))?;
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("run name {:?} must be a non-empty plain file name", self.name));
        }
        let v = &self.variant;
        if v.curriculum_warm_start && v.curriculum_goal_sim {
            return bad("at most one curriculum mode may be active".into());
        }
        if v.meta_training && (v.curriculum_warm_start || v.curriculum_goal_sim) {
            return bad("meta-training does not combine with a curriculum".into());
        }
        if self.eval_every == 0 {
            return bad("eval_every must be positive".into());
        }
        if self.steps > 0 && self.steps < self.eval_every {
            return bad(format!("step budget {} is below the eval cadence {}", self.steps, self.eval_every));
        }
        if self.eval_episodes == 0 {
            return bad("eval_episodes must be positive".into());
        }
        if let Some(t) = self.early_stop {
            if !(0.0..=1.0).contains(&t) {
                return bad(format!("early_stop {t} outside [0, 1]"));
            }
        }
        if self.network.embed_dim == 0 || self.network.lstm_hidden == 0 || self.network.field_dim == 0 {
            return bad("network widths must be positive".into());
        }
        self.dqn.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.schedule.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.episode.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.meta.train.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(())
    }

    /// The schedule with its mode taken from the variant flags.
    pub fn effective_schedule(&self) -> CurriculumSchedule {
        CurriculumSchedule {
            mode: self.variant.curriculum_mode(),
            ..self.schedule
        }
    }

    /// Episode settings for training: shaping follows the variant (always on
    /// for meta-training) and uses the DQN discount.
    pub fn train_episode(&self, seed: u64) -> EpisodeConfig {
        let mut e = self.episode.clone().with_seed(seed);
        e.shaping_enabled = self.variant.augmented_reward || self.variant.meta_training;
        e.gamma = self.dqn.gamma.max(f64::MIN_POSITIVE);
        e
    }
}
