//! Trains plain QWeb on click-dialog with the DQN trainer and reports greedy
//! success every 500 environment steps.

use anyhow::Result;
use qweblab::dqn::{evaluate, CurriculumSchedule, DqnConfig, Trainer};
use qweblab::env::{EpisodeConfig, WebEnv};
use qweblab::nn::ParamStore;
use qweblab::qweb::{QWebConfig, QWebNet, Vocab};

fn main() -> Result<()> {
    let steps: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3000);
    let env_name = "click-dialog";
    let cfg = EpisodeConfig::default().with_seed(1);
    let env = WebEnv::new(env_name, cfg.clone())?;
    let mut store = ParamStore::new(1);
    let qcfg = QWebConfig { embed_dim: 16, lstm_hidden: 16, field_dim: 16, ..QWebConfig::default() };
    let net = QWebNet::new(qcfg, Vocab::from_texts(env.vocabulary()), &mut store)?;
    let mut trainer = Trainer::new(net, store, env, DqnConfig::default(), CurriculumSchedule::default(), 1)?;

    let mut next = 500;
    while trainer.step() < steps {
        trainer.run_episode()?;
        if trainer.step() >= next {
            let rate = evaluate(&trainer.net, &trainer.params, env_name, trainer.env.scale(), &cfg, 100, 99)?;
            println!(
                "step {:>6} train steps {:>6} temperature {:.2} eval success {rate:.2}",
                trainer.step(),
                trainer.train_steps(),
                trainer.temperature()
            );
            next += 500;
        }
    }
    Ok(())
}
