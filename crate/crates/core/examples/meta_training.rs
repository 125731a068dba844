//! MetaQWeb on login-user: a pretrained, frozen INET labels RRND goals and
//! QWeb trains only on those synthetic tasks, with the dense meta reward
//! added to the environment reward.

use anyhow::Result;
use qweblab::dqn::{evaluate, CurriculumSchedule, DqnConfig, Trainer};
use qweblab::env::{EpisodeConfig, WebEnv};
use qweblab::meta::{evaluate_inet, meta_test, Inet, InetConfig, InetTrainConfig, InetTrainer, MetaQWeb};
use qweblab::nn::ParamStore;
use qweblab::qweb::{QWebConfig, QWebNet, Vocab};

fn main() -> Result<()> {
    let steps: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let env_name = "login-user";
    let env = WebEnv::new(env_name, EpisodeConfig::default().with_seed(11))?;
    let vocab = Vocab::from_texts(env.vocabulary());

    let mut inet_store = ParamStore::new(11);
    let inet = Inet::new(InetConfig { embed_dim: 16, hidden: 16 }, vocab.clone(), &mut inet_store)?;
    let cfg = InetTrainConfig { temperature_anneal_goals: 200, ..InetTrainConfig::default() };
    let mut inet_trainer = InetTrainer::new(inet, inet_store, env.clone(), cfg, 11)?;
    for _ in 0..1500 {
        inet_trainer.run_goal()?;
    }
    let report = evaluate_inet(&inet_trainer.net, &inet_trainer.params, env_name, env.scale(), 300, 5)?;
    println!("INET held-out success {:.3}", report.success_rate);

    let mut store = ParamStore::new(11);
    let qcfg = QWebConfig { embed_dim: 16, lstm_hidden: 16, field_dim: 16, shallow: true, ..QWebConfig::default() };
    let net = QWebNet::new(qcfg, vocab, &mut store)?;
    let trainer = Trainer::new(net, store, env, DqnConfig::default(), CurriculumSchedule::default(), 11)?;
    let mut meta = MetaQWeb::new(trainer, inet_trainer.net.clone(), inet_trainer.params.clone(), 11);

    let eval_cfg = EpisodeConfig::default();
    let mut next = 2500;
    while meta.trainer.step() < steps {
        meta.meta_train_step()?;
        if meta.trainer.step() >= next {
            let t = &meta.trainer;
            let original = evaluate(&t.net, &t.params, env_name, t.env.scale(), &eval_cfg, 100, 21)?;
            let (inet, inet_params) = meta.inet();
            let synthetic = meta_test(&t.net, &t.params, inet, inet_params, env_name, t.env.scale(), 100, 22)?;
            println!("step {:>6}: original task {original:.2}, meta-test {synthetic:.2}, malformed {}", t.step(), meta.malformed);
            next += 2500;
        }
    }
    Ok(())
}
