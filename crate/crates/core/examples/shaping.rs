//! Potential-based shaping along an oracle episode: the potential is the
//! fraction of relevant elements that match the goal, and the shaping terms
//! telescope to gamma times its total change.

use anyhow::Result;
use qweblab::env::{potential, EpisodeConfig, WebEnv};

fn main() -> Result<()> {
    let cfg = EpisodeConfig { shaping_enabled: true, ..EpisodeConfig::default().with_seed(2) };
    let gamma = cfg.gamma;
    let mut env = WebEnv::new("book-flight-form", cfg)?;
    let task = env.reset().clone();
    let phi0 = potential(&task.initial, &task.goal)?;
    let mut sum = 0.0;
    loop {
        let a = env.oracle_action(None)?;
        let out = env.step(a)?;
        let phi = potential(&out.next_state, &task.goal)?;
        sum += out.shaping;
        println!(
            "{a:?}: phi {phi:.3} shaping {:+.4} env reward {:+.2} total {:+.4}",
            out.shaping,
            out.env_reward(),
            out.reward
        );
        if out.done {
            println!("sum of shaping {sum:.6} = gamma * (phi_N - phi_0) = {:.6}", gamma * (phi - phi0));
            break;
        }
    }
    Ok(())
}
