//! Samples a task from every environment, prints it, and solves it with the
//! scripted oracle.

use anyhow::Result;
use qweblab::dqn::{rollout, OraclePolicy};
use qweblab::env::{potential, EnvKind, EpisodeConfig, WebEnv};
use qweblab::experiment::inspect_env;

fn main() -> Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    for kind in EnvKind::ALL {
        let mut env = WebEnv::new(kind.name(), EpisodeConfig::default().with_seed(seed))?;
        println!("== {}", kind.name());
        print!("{}", inspect_env(kind.name(), seed, env.scale())?);
        let task = env.sample_task();
        let phi0 = potential(&task.initial, &task.goal)?;
        let ep = rollout(&mut OraclePolicy, &mut env, task, None)?;
        let actions: Vec<String> = ep.transitions.iter().map(|t| format!("{:?}", t.action)).collect();
        println!("oracle: {} steps, success {}, phi0 {phi0:.2}", ep.transitions.len(), ep.success());
        println!("  {}\n", actions.join("\n  "));
    }
    Ok(())
}
