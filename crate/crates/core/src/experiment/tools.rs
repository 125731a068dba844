use crate::env::{EnvKind, EpisodeConfig, SuiteScale, WebEnv};
use crate::meta::{generate_corpus, CorpusRecord, InetInstructor, InetReport};
use crate::qweb::Vocab;

use super::config::ExperimentConfig;
use super::train::pretrain_inet;
use super::ExperimentError;

/// `(name, description)` of every registered environment.
pub fn list_envs() -> Vec<(&'static str, &'static str)> {
    EnvKind::ALL.iter().map(|k| (k.name(), k.describe())).collect()
}

/// The instruction and the JSON page of the task drawn with `seed`.
pub fn inspect_env(name: &str, seed: u64, scale: &SuiteScale) -> Result<String, ExperimentError> {
    let mut env = WebEnv::with_scale(name, EpisodeConfig::default().with_seed(seed), scale.clone())?;
    let task = env.reset().clone();
    let tree: serde_json::Value = serde_json::from_str(&task.initial.to_json())?;
    Ok(format!(
        "instruction: {}\nrelevant: {:?}\nterminal: {:?}\nmax_steps: {}\n{}\n",
        task.instruction,
        task.goal.relevant,
        task.terminal,
        task.max_steps,
        serde_json::to_string_pretty(&tree)?
    ))
}

/// Pretrains INET as `config` specifies, then synthesizes `count` pairs on
/// `config.env`.
pub fn gen_corpus(config: &ExperimentConfig, count: usize) -> Result<(Vec<CorpusRecord>, InetReport), ExperimentError> {
    config.validate()?;
    let kind = EnvKind::parse(&config.env)?;
    let vocab = Vocab::from_texts(kind.vocabulary(&config.scale));
    let (inet, params, report) = pretrain_inet(config, &vocab)?;
    let mut env = WebEnv::with_scale(&config.env, EpisodeConfig::default().with_seed(config.seed), config.scale.clone())?;
    let mut instructor = InetInstructor { net: &inet, params: &params };
    let records = generate_corpus(&mut env, &mut instructor, "rrnd+inet", count, config.seed)?;
    Ok((records, report))
}

/// One JSON object per line.
pub fn to_jsonl(records: &[CorpusRecord]) -> Result<String, ExperimentError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}
