//! Trains the INET instructor on login-user goals, reports held-out accuracy
//! with the per-key error breakdown, then labels a few RRND goals.

use anyhow::Result;
use qweblab::env::{EpisodeConfig, WebEnv};
use qweblab::meta::{evaluate_inet, generate_corpus, Inet, InetConfig, InetInstructor, InetTrainConfig, InetTrainer};
use qweblab::nn::ParamStore;
use qweblab::qweb::Vocab;

fn main() -> Result<()> {
    let goals: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1500);
    let env_name = "login-user";
    let env = WebEnv::new(env_name, EpisodeConfig::default().with_seed(2))?;
    let mut store = ParamStore::new(2);
    let net = Inet::new(InetConfig { embed_dim: 16, hidden: 16 }, Vocab::from_texts(env.vocabulary()), &mut store)?;
    let cfg = InetTrainConfig { temperature_anneal_goals: 200, ..InetTrainConfig::default() };
    let mut trainer = InetTrainer::new(net, store, env, cfg, 2)?;
    for g in 1..=goals {
        let ep = trainer.run_goal()?;
        if g % 250 == 0 {
            println!("goal {g}: {}/{} keys right, loss {:?}", ep.correct, ep.keys, ep.mean_loss);
        }
    }

    let report = evaluate_inet(&trainer.net, &trainer.params, env_name, trainer.env.scale(), 500, 99)?;
    println!("held-out instruction success {:.3}", report.success_rate);
    for key in report.key_errors.keys() {
        println!("  {key}: {} errors ({:.0}% of all)", report.key_errors[key], 100.0 * report.error_share(key));
    }

    let mut instructor = InetInstructor { net: &trainer.net, params: &trainer.params };
    let mut env = WebEnv::new(env_name, EpisodeConfig::default().with_seed(7))?;
    for record in generate_corpus(&mut env, &mut instructor, "inet", 3, 7)? {
        println!("{}", serde_json::to_string(&record.instruction)?);
    }
    Ok(())
}
