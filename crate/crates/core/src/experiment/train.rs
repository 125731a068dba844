use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dqn::{evaluate, seed_stream, CurriculumMode, DqnError, Trainer};
use crate::env::{EnvKind, EpisodeConfig, WebEnv};
use crate::meta::{evaluate_inet, meta_test, Inet, InetReport, InetTrainer, MetaError, MetaQWeb};
use crate::nn::{checkpoint, ParamStore};
use crate::qweb::{QWebNet, Vocab};

use super::config::ExperimentConfig;
use super::ExperimentError;

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const CONFIG_FILE: &str = "config.json";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const TARGET_DIR: &str = "target";
pub const INET_DIR: &str = "inet";
pub const INET_REPORT_FILE: &str = "inet_report.json";

/// First line of every metrics file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsHeader {
    pub kind: String,
    pub name: String,
    pub env: String,
    pub variant: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

/// One evaluation point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    pub env: String,
    /// Mean training loss since the previous row.
    pub loss: Option<f64>,
    pub eval_success_rate: f64,
    pub p: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub temperature: f64,
    pub train_success_rate: Option<f64>,
    pub episodes: usize,
    pub train_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta_test_success_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub malformed: Option<usize>,
}

/// Parses a metrics file into its header and rows.
pub fn parse_metrics(text: &str) -> Result<(MetricsHeader, Vec<MetricsRow>), ExperimentError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or_else(|| ExperimentError::Config("metrics file is empty".into()))?;
    let header: MetricsHeader = serde_json::from_str(first)?;
    if header.kind != "header" {
        return Err(ExperimentError::Config("metrics file does not start with a header".into()));
    }
    let rows = lines.map(serde_json::from_str).collect::<Result<Vec<MetricsRow>, _>>()?;
    Ok((header, rows))
}

pub fn read_metrics(path: &Path) -> Result<(MetricsHeader, Vec<MetricsRow>), ExperimentError> {
    let text = fs::read_to_string(path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
    parse_metrics(&text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub out_dir: PathBuf,
    pub steps: usize,
    pub rows: usize,
    pub final_eval: Option<f64>,
    pub best_eval: Option<f64>,
    pub resumed_from: Option<usize>,
    pub stopped_early: bool,
    pub inet: Option<InetReport>,
}

/// `$QWEBLAB_OUT` or `runs`.
pub fn output_root() -> PathBuf {
    std::env::var_os("QWEBLAB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

/// The run directory: an explicit override, then `config.out_dir`, then
/// `<output root>/<name>`.
pub fn resolve_out_dir(config: &ExperimentConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| output_root().join(&config.name))
}

/// Seed for a named stream; resumed runs get fresh streams per start step.
fn stream(seed: u64, name: &str, start: usize) -> u64 {
    if start == 0 {
        seed_stream(seed, name)
    } else {
        seed_stream(seed, &format!("{name}@{start}"))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> ExperimentError {
    ExperimentError::Io(format!("{}: {e}", path.display()))
}

fn non_finite(step: usize, e: ExperimentError) -> ExperimentError {
    match e {
        ExperimentError::Dqn(DqnError::NonFinite(detail)) | ExperimentError::Meta(MetaError::Dqn(DqnError::NonFinite(detail))) => {
            ExperimentError::NonFinite { step, detail }
        }
        other => other,
    }
}

pub fn qweb_checkpoint_meta(config: &ExperimentConfig, vocab: &Vocab, step: usize, train_steps: usize, episodes: usize) -> serde_json::Value {
    json!({
        "kind": "qweb",
        "qweb": config.network,
        "vocab": vocab,
        "env": config.env,
        "scale": config.scale,
        "step": step,
        "train_steps": train_steps,
        "episodes": episodes,
    })
}

struct EpisodeResult {
    success: bool,
    loss: Option<f64>,
    malformed: bool,
}

enum Runner {
    Plain(Box<Trainer>),
    Meta(Box<MetaQWeb>),
}

impl Runner {
    fn trainer(&self) -> &Trainer {
        match self {
            Runner::Plain(t) => t,
            Runner::Meta(m) => &m.trainer,
        }
    }

    fn episode(&mut self) -> Result<EpisodeResult, ExperimentError> {
        Ok(match self {
            Runner::Plain(t) => {
                let s = t.run_episode()?;
                EpisodeResult {
                    success: s.success,
                    loss: s.mean_loss,
                    malformed: false,
                }
            }
            Runner::Meta(m) => {
                let s = m.meta_train_step()?;
                EpisodeResult {
                    success: s.success,
                    loss: s.mean_loss,
                    malformed: s.malformed,
                }
            }
        })
    }
}

/// Pretrains INET on the environment's own goals and writes its report.
pub fn pretrain_inet(config: &ExperimentConfig, vocab: &Vocab) -> Result<(Inet, ParamStore, InetReport), ExperimentError> {
    let seed = config.seed;
    let env = WebEnv::with_scale(
        &config.env,
        EpisodeConfig::default().with_seed(seed_stream(seed, "inet.env")),
        config.scale.clone(),
    )?;
    let mut params = ParamStore::new(seed_stream(seed, "inet.init"));
    let net = Inet::new(config.meta.inet, vocab.clone(), &mut params)?;
    let mut trainer = InetTrainer::new(net, params, env, config.meta.train, seed)?;
    for _ in 0..config.meta.pretrain_goals {
        trainer.run_goal()?;
    }
    let report = evaluate_inet(
        &trainer.net,
        &trainer.params,
        &config.env,
        &config.scale,
        config.meta.eval_goals.max(1),
        seed_stream(seed, "inet.eval"),
    )?;
    Ok((trainer.net, trainer.params, report))
}

fn inet_report_json(report: &InetReport) -> serde_json::Value {
    let shares: serde_json::Map<String, serde_json::Value> = report
        .key_errors
        .keys()
        .map(|k| (k.clone(), json!(report.error_share(k))))
        .collect();
    json!({
        "goals": report.goals,
        "successes": report.successes,
        "success_rate": report.success_rate,
        "key_errors": report.key_errors,
        "error_shares": shares,
    })
}

/// Trains the configured pipeline into `out`, resuming from the checkpoint
/// there when one exists.
pub fn cmd_train(config: &ExperimentConfig, out: &Path) -> Result<TrainSummary, ExperimentError> {
    config.validate()?;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let config_json = config.to_json();
    let config_path = out.join(CONFIG_FILE);
    let ckpt_dir = out.join(CHECKPOINT_DIR);
    let metrics_path = out.join(METRICS_FILE);
    let resume = ckpt_dir.join(checkpoint::MANIFEST_FILE).exists() && metrics_path.exists();
    if resume {
        let existing = fs::read_to_string(&config_path).map_err(|e| io_err(&config_path, e))?;
        if existing != config_json {
            return Err(ExperimentError::Config(format!(
                "{} holds a run with a different config",
                out.display()
            )));
        }
    }
    fs::write(&config_path, &config_json).map_err(|e| io_err(&config_path, e))?;

    let kind = EnvKind::parse(&config.env)?;
    let vocab = Vocab::from_texts(kind.vocabulary(&config.scale));
    let seed = config.seed;
    let mut params = ParamStore::new(seed_stream(seed, "init"));
    let net = QWebNet::new(config.network, vocab.clone(), &mut params)?;

    let (mut start, mut train_steps, mut episodes) = (0usize, 0usize, 0usize);
    let mut target = None;
    let mut kept_rows = Vec::new();
    if resume {
        let meta = checkpoint::load_into(&ckpt_dir, &mut params)?;
        let field = |k: &str| meta.get(k).and_then(|v| v.as_u64()).unwrap_or(0) as usize;
        (start, train_steps, episodes) = (field("step"), field("train_steps"), field("episodes"));
        let mut t = params.clone();
        checkpoint::load_into(&ckpt_dir.join(TARGET_DIR), &mut t)?;
        target = Some(t);
        let (_, rows) = read_metrics(&metrics_path)?;
        kept_rows = rows.into_iter().filter(|r| r.step <= start).collect();
    }

    let header = MetricsHeader {
        kind: "header".into(),
        name: config.name.clone(),
        env: config.env.clone(),
        variant: config.variant.label(),
        seed,
        config: config.clone(),
    };
    {
        let mut w = BufWriter::new(File::create(&metrics_path).map_err(|e| io_err(&metrics_path, e))?);
        writeln!(w, "{}", serde_json::to_string(&header)?).map_err(|e| io_err(&metrics_path, e))?;
        for r in &kept_rows {
            writeln!(w, "{}", serde_json::to_string(r)?).map_err(|e| io_err(&metrics_path, e))?;
        }
        w.flush().map_err(|e| io_err(&metrics_path, e))?;
    }
    let mut summary = TrainSummary {
        out_dir: out.to_path_buf(),
        steps: start,
        rows: kept_rows.len(),
        final_eval: kept_rows.last().map(|r| r.eval_success_rate),
        best_eval: kept_rows.iter().map(|r| r.eval_success_rate).fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v)))),
        resumed_from: resume.then_some(start),
        stopped_early: false,
        inet: None,
    };
    if config.steps == 0 || start >= config.steps {
        return Ok(summary);
    }

    let env = WebEnv::with_scale(&config.env, config.train_episode(stream(seed, "env", start)), config.scale.clone())?;
    let mut trainer = Trainer::new(net, params, env, config.dqn, config.effective_schedule(), stream(seed, "trainer", start))?;
    trainer.set_progress(start, train_steps);
    if let Some(t) = target {
        trainer.target = t;
    }
    let mut runner = if config.variant.meta_training {
        let inet_dir = out.join(INET_DIR);
        let (inet, inet_params) = if inet_dir.join(checkpoint::MANIFEST_FILE).exists() {
            let mut p = ParamStore::new(seed_stream(seed, "inet.init"));
            let inet = Inet::new(config.meta.inet, vocab.clone(), &mut p)?;
            checkpoint::load_into(&inet_dir, &mut p)?;
            (inet, p)
        } else {
            let (inet, p, report) = pretrain_inet(config, &vocab)?;
            checkpoint::save(&inet_dir, &p, json!({"kind": "inet", "inet": config.meta.inet, "vocab": vocab}))?;
            let report_path = out.join(INET_REPORT_FILE);
            fs::write(&report_path, serde_json::to_string_pretty(&inet_report_json(&report))?)
                .map_err(|e| io_err(&report_path, e))?;
            summary.inet = Some(report);
            (inet, p)
        };
        Runner::Meta(Box::new(MetaQWeb::new(trainer, inet, inet_params, stream(seed, "meta", start))))
    } else {
        Runner::Plain(Box::new(trainer))
    };

    let mut metrics = OpenOptions::new()
        .append(true)
        .open(&metrics_path)
        .map_err(|e| io_err(&metrics_path, e))?;
    let eval_seed = seed_stream(seed, "eval");
    let mut next_eval = start - start % config.eval_every + config.eval_every;
    let (mut loss_sum, mut loss_n, mut wins, mut eps, mut malformed) = (0.0, 0usize, 0usize, 0usize, 0usize);
    loop {
        let step = runner.trainer().step();
        if step >= config.steps {
            break;
        }
        let r = runner.episode().map_err(|e| non_finite(step, e))?;
        if r.malformed {
            malformed += 1;
        } else {
            episodes += 1;
            eps += 1;
            wins += r.success as usize;
        }
        if let Some(l) = r.loss {
            loss_sum += l;
            loss_n += 1;
        }
        let step = runner.trainer().step();
        let at_end = step >= config.steps;
        if step < next_eval && !at_end {
            continue;
        }
        while next_eval <= step {
            next_eval += config.eval_every;
        }
        let t = runner.trainer();
        let eval = evaluate(&t.net, &t.params, &config.env, &config.scale, &config.episode, config.eval_episodes, eval_seed)?;
        let (p, k) = match t.schedule.mode {
            CurriculumMode::Off => (0.0, t.schedule.k_max),
            _ => t.curriculum(),
        };
        let meta_test_rate = match &runner {
            Runner::Meta(m) => {
                let (inet, inet_params) = m.inet();
                Some(meta_test(
                    &t.net,
                    &t.params,
                    inet,
                    inet_params,
                    &config.env,
                    &config.scale,
                    config.eval_episodes,
                    seed_stream(seed, "meta.test"),
                )?)
            }
            Runner::Plain(_) => None,
        };
        let row = MetricsRow {
            step,
            env: config.env.clone(),
            loss: (loss_n > 0).then(|| loss_sum / loss_n as f64),
            eval_success_rate: eval,
            p,
            k,
            temperature: t.temperature(),
            train_success_rate: (eps > 0).then(|| wins as f64 / eps as f64),
            episodes,
            train_steps: t.train_steps(),
            meta_test_success_rate: meta_test_rate,
            malformed: matches!(runner, Runner::Meta(_)).then_some(malformed),
        };
        writeln!(metrics, "{}", serde_json::to_string(&row)?).map_err(|e| io_err(&metrics_path, e))?;
        metrics.flush().map_err(|e| io_err(&metrics_path, e))?;
        (loss_sum, loss_n, wins, eps) = (0.0, 0, 0, 0);
        summary.rows += 1;
        summary.final_eval = Some(eval);
        summary.best_eval = Some(summary.best_eval.map_or(eval, |b| b.max(eval)));
        if config.checkpoints {
            let meta = qweb_checkpoint_meta(config, &t.net.vocab, step, t.train_steps(), episodes);
            checkpoint::save(&ckpt_dir, &t.params, meta)?;
            checkpoint::save(&ckpt_dir.join(TARGET_DIR), &t.target, json!({"kind": "target"}))?;
        }
        if config.early_stop.is_some_and(|th| eval >= th) {
            summary.stopped_early = true;
            break;
        }
    }
    summary.steps = runner.trainer().step();
    Ok(summary)
}
