//! The config-driven runner used by the CLI: trains two seeds of a small
//! config into a temporary directory, evaluates the checkpoint and exports
//! the success curves as CSV.

use anyhow::Result;
use qweblab::experiment::{cmd_eval, cmd_export, cmd_train, ExperimentConfig, CHECKPOINT_DIR};

fn main() -> Result<()> {
    let root = std::env::temp_dir().join("qweblab-example-runs");
    let base = ExperimentConfig::from_json(
        r#"{
            "name": "click-dialog-demo",
            "env": "click-dialog",
            "network": {"embed_dim": 16, "lstm_hidden": 16, "field_dim": 16},
            "steps": 2000,
            "eval_every": 500,
            "eval_episodes": 50
        }"#,
    )?;
    for seed in [1, 2] {
        let cfg = ExperimentConfig { seed, ..base.clone() };
        let out = root.join(format!("seed-{seed}"));
        let summary = cmd_train(&cfg, &out)?;
        println!("seed {seed}: {} steps, best eval {:?}, resumed from {:?}", summary.steps, summary.best_eval, summary.resumed_from);
        let eval = cmd_eval(Some(&out.join(CHECKPOINT_DIR)), &cfg.env, 100, 123, false)?;
        println!("  checkpoint success on 100 fresh episodes: {:.2}", eval.success_rate);
    }
    print!("{}", cmd_export(&root)?);
    Ok(())
}
