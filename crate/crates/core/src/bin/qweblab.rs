use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use qweblab::env::SuiteScale;
use qweblab::experiment::{
    cmd_eval, cmd_export, cmd_train, gen_corpus, inspect_env, list_envs, output_root, resolve_out_dir, to_jsonl,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "qweblab", version, about = "Guided DQN web-navigation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train from a JSON config; resumes from the run directory's checkpoint.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Run directory (default: $QWEBLAB_OUT/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the step budget.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Greedy success rate of a checkpoint.
    Eval {
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Evaluate the scripted oracle instead of a network.
        #[arg(long)]
        oracle: bool,
        /// Where to write the JSON summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CSV of success-rate curves for every run under a directory.
    Export {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize instruction/goal pairs with RRND and a freshly trained INET.
    GenCorpus {
        #[arg(long)]
        env: String,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional config supplying INET settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the instruction and page of one task.
    InspectEnv {
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    ListEnvs,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train { config, seed, out, steps } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = steps {
                cfg.steps = s;
            }
            cfg.validate()?;
            let dir = resolve_out_dir(&cfg, out.as_deref());
            let summary = cmd_train(&cfg, &dir).with_context(|| format!("training {}", cfg.name))?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Eval { ckpt, env, episodes, seed, oracle, out } => {
            let summary = cmd_eval(ckpt.as_deref(), &env, episodes, seed, oracle)?;
            println!("success_rate {:.4}", summary.success_rate);
            let path = out.unwrap_or_else(|| {
                let name = format!("eval-{}-{}-{seed}.json", summary.policy, env);
                ckpt.clone().unwrap_or_else(output_root).join(name)
            });
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, serde_json::to_string_pretty(&summary)?)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        Command::Export { dir, out } => {
            let csv = cmd_export(&dir)?;
            match out {
                Some(p) => fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{csv}"),
            }
        }
        Command::GenCorpus { env, count, seed, config, out } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => ExperimentConfig::default(),
            };
            cfg.env = env;
            cfg.seed = seed;
            let (records, report) = gen_corpus(&cfg, count)?;
            eprintln!(
                "INET held-out success {:.3}; error shares {:?}",
                report.success_rate,
                report.key_errors.keys().map(|k| (k, report.error_share(k))).collect::<Vec<_>>()
            );
            let text = to_jsonl(&records)?;
            match out {
                Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
        }
        Command::InspectEnv { env, seed } => print!("{}", inspect_env(&env, seed, &SuiteScale::default())?),
        Command::ListEnvs => {
            let envs = list_envs();
            if envs.is_empty() {
                bail!("no environments registered");
            }
            for (name, about) in envs {
                println!("{name:<18} {about}");
            }
        }
    }
    Ok(())
}
