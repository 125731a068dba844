//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release --test acceptance`. Positional arguments
//! select criteria by id, e.g. `-- C7 C8`. RL criteria use the median over
//! seeds 1-3; the third seed is skipped once the first two agree.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use common::gradcheck::check;
use common::models::{inet_loss_gradcheck, qweb_loss_gradcheck};
use common::primitives::cases;
use common::reference::{fuzz, oracle_success};
use common::shaping::{telescoping_error, toy_policy_invariance};
use qweblab::dqn::evaluate;
use qweblab::env::{EnvKind, EpisodeConfig};
use qweblab::experiment::{cmd_train, load_qweb, ExperimentConfig, TrainSummary, CHECKPOINT_DIR, INET_DIR, METRICS_FILE};
use qweblab::meta::{meta_test, Inet, InetReport};
use qweblab::nn::{checkpoint, ParamStore};

const SEEDS: [u64; 3] = [1, 2, 3];

struct Verdict {
    pass: bool,
    detail: String,
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str, seed: u64) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::load(&configs_dir().join(format!("{name}.json")))?;
    c.seed = seed;
    Ok(c)
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Runs `f` on seeds 1, 2 and, when they disagree on `pass`, 3.
fn over_seeds<T>(mut f: impl FnMut(u64) -> Result<T>, pass: impl Fn(&T) -> bool) -> Result<(Vec<T>, bool)> {
    let mut out = Vec::new();
    for &seed in &SEEDS {
        let r = f(seed)?;
        out.push(r);
        let passed = out.iter().filter(|r| pass(r)).count();
        if passed >= 2 || out.len() - passed >= 2 {
            break;
        }
    }
    let passed = out.iter().filter(|r| pass(r)).count();
    Ok((out, passed >= 2))
}

struct Run {
    summary: TrainSummary,
    seconds: f64,
    _dir: tempfile::TempDir,
}

fn train(name: &str, seed: u64) -> Result<Run> {
    let dir = tempfile::tempdir()?;
    let cfg = config(name, seed)?;
    let t0 = Instant::now();
    let summary = cmd_train(&cfg, dir.path()).with_context(|| format!("{name} seed {seed}"))?;
    Ok(Run { summary, seconds: t0.elapsed().as_secs_f64(), _dir: dir })
}

fn best(r: &Run) -> f64 {
    r.summary.best_eval.unwrap_or(0.0)
}

fn describe(runs: &[Run]) -> String {
    runs.iter()
        .map(|r| format!("best {:.2} by step {} in {:.0}s", best(r), r.summary.steps, r.seconds))
        .collect::<Vec<_>>()
        .join("; ")
}

fn reaches(name: &str, threshold: f64) -> Result<Verdict> {
    let (runs, pass) = over_seeds(|s| train(name, s), |r| best(r) >= threshold)?;
    let m = median(&runs.iter().map(best).collect::<Vec<_>>());
    Ok(Verdict { pass, detail: format!("{name}: median best {m:.2} (>= {threshold}) [{}]", describe(&runs)) })
}

fn c1() -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for env in ["click-dialog", "login-user", "enter-password"] {
        let name = format!("simple-{env}");
        let (runs, ok) = over_seeds(|s| train(&name, s), |r| best(r) >= 0.95 && r.seconds <= 900.0)?;
        pass &= ok;
        parts.push(format!("{env} [{}]", describe(&runs)));
    }
    Ok(Verdict { pass, detail: parts.join(" | ") })
}

fn c2() -> Result<Verdict> {
    let (runs, pass) = over_seeds(|s| train("book-flight-plain", s), |r| best(r) <= 0.05)?;
    Ok(Verdict {
        pass,
        detail: format!("plain book-flight: median best {:.2} (<= 0.05) [{}]", median(&runs.iter().map(best).collect::<Vec<_>>()), describe(&runs)),
    })
}

fn c3() -> Result<Verdict> {
    let w = reaches("book-flight-warm-start", 0.90)?;
    let g = reaches("book-flight-goal-sim", 0.90)?;
    Ok(Verdict { pass: w.pass && g.pass, detail: format!("{} | {}", w.detail, g.detail) })
}

fn c4() -> Result<Verdict> {
    reaches("book-flight-shaping", 0.95)
}

struct MetaRun {
    inet: InetReport,
    original: f64,
    meta: f64,
}

fn meta_run(seed: u64) -> Result<MetaRun> {
    let dir = tempfile::tempdir()?;
    let cfg = config("book-flight-meta", seed)?;
    let summary = cmd_train(&cfg, dir.path())?;
    let inet = summary.inet.context("meta run produced no INET report")?;
    let (net, params, info) = load_qweb(&dir.path().join(CHECKPOINT_DIR))?;
    let mut inet_params = ParamStore::new(0);
    let inet_net = Inet::new(cfg.meta.inet, net.vocab.clone(), &mut inet_params)?;
    checkpoint::load_into(&dir.path().join(INET_DIR), &mut inet_params)?;
    let original = evaluate(&net, &params, &cfg.env, &info.scale, &EpisodeConfig::default(), 500, 10_000 + seed)?;
    let meta = meta_test(&net, &params, &inet_net, &inet_params, &cfg.env, &info.scale, 500, 20_000 + seed)?;
    Ok(MetaRun { inet, original, meta })
}

fn meta_ok(r: &MetaRun) -> bool {
    r.original >= 0.90 && (r.original - r.meta).abs() <= 0.05
}

/// Criteria 5 and 6 share the meta-training runs.
fn c5_c6() -> Result<(Verdict, Verdict)> {
    let mut runs = Vec::new();
    for &seed in &SEEDS {
        runs.push(meta_run(seed)?);
        let inet_pass = runs.iter().filter(|r| r.inet.success_rate >= 0.90).count();
        let meta_pass = runs.iter().filter(|r| meta_ok(r)).count();
        let decided = |p: usize| p >= 2 || runs.len() - p >= 2;
        if decided(inet_pass) && decided(meta_pass) {
            break;
        }
    }
    let inet_rates: Vec<f64> = runs.iter().map(|r| r.inet.success_rate).collect();
    let c5 = Verdict {
        pass: runs.iter().filter(|r| r.inet.success_rate >= 0.90).count() >= 2,
        detail: format!(
            "INET median {:.3} (>= 0.90) over {} held-out goals; date error share {}",
            median(&inet_rates),
            runs[0].inet.goals,
            runs.iter().map(|r| format!("{:.2}", r.inet.error_share("date"))).collect::<Vec<_>>().join("/")
        ),
    };
    let c6 = Verdict {
        pass: runs.iter().filter(|r| meta_ok(r)).count() >= 2,
        detail: format!(
            "original/meta-test per seed: {}",
            runs.iter().map(|r| format!("{:.3}/{:.3}", r.original, r.meta)).collect::<Vec<_>>().join(", ")
        ),
    };
    Ok((c5, c6))
}

fn c7() -> Result<Verdict> {
    let err = telescoping_error(1000, 7);
    let inv = toy_policy_invariance();
    Ok(Verdict {
        pass: err <= 1e-6 && inv.is_ok(),
        detail: format!("telescoping worst {err:.2e} (<= 1e-6); toy invariance {inv:?}"),
    })
}

fn c8() -> Result<Verdict> {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (seed, (a, b, c)) in [(1, (1, 1, 1)), (2, (3, 4, 2)), (3, (8, 8, 8)), (4, (5, 2, 7)), (5, (2, 6, 3))] {
        for mut case in cases(seed, a, b, c) {
            worst = worst.max(check(&*case.build, &mut case.store, 1e-5, seed).worst_rel);
            checked += 1;
        }
    }
    for seed in 0..3 {
        worst = worst.max(qweb_loss_gradcheck(seed, false));
        worst = worst.max(qweb_loss_gradcheck(seed, true));
        worst = worst.max(inet_loss_gradcheck(seed));
        checked += 3;
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok(Verdict {
        pass: worst <= 1e-3 && secs < 60.0,
        detail: format!("{checked} checks, worst relative error {worst:.2e} (<= 1e-3), {secs:.1}s (< 60s)"),
    })
}

fn c9() -> Result<Verdict> {
    let report = fuzz(10_000, 9);
    let rates: Vec<(EnvKind, f64)> = EnvKind::ALL.into_iter().map(|k| (k, oracle_success(k, 0..100))).collect();
    let pass = report.mismatches.is_empty() && report.actions >= 10_000 && rates.iter().all(|(_, r)| *r == 1.0);
    Ok(Verdict {
        pass,
        detail: format!(
            "{} fuzzed actions, {} mismatches{}; oracle {}",
            report.actions,
            report.mismatches.len(),
            report.mismatches.first().map(|m| format!(" (first: {m})")).unwrap_or_default(),
            rates.iter().map(|(k, r)| format!("{}={r}", k.name())).collect::<Vec<_>>().join(" ")
        ),
    })
}

fn c10() -> Result<Verdict> {
    let cfg = config("smoke-click-dialog", 1)?;
    let (a, b) = (tempfile::tempdir()?, tempfile::tempdir()?);
    cmd_train(&cfg, a.path())?;
    cmd_train(&cfg, b.path())?;
    let (x, y) = (std::fs::read(a.path().join(METRICS_FILE))?, std::fs::read(b.path().join(METRICS_FILE))?);
    Ok(Verdict { pass: x == y, detail: format!("metrics {} bytes, identical: {}", x.len(), x == y) })
}

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| filters.is_empty() || filters.iter().any(|f| f.eq_ignore_ascii_case(id));
    let mut failed = 0;
    let mut report = |id: &str, v: Result<Verdict>| {
        let (pass, detail) = match v {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        failed += usize::from(!pass);
        println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    };
    let fast: [(&str, fn() -> Result<Verdict>); 4] = [("C7", c7), ("C8", c8), ("C9", c9), ("C10", c10)];
    for (id, f) in fast {
        if wanted(id) {
            report(id, f());
        }
    }
    let slow: [(&str, fn() -> Result<Verdict>); 4] = [("C1", c1), ("C2", c2), ("C3", c3), ("C4", c4)];
    for (id, f) in slow {
        if wanted(id) {
            report(id, f());
        }
    }
    if wanted("C5") || wanted("C6") {
        match c5_c6() {
            Ok((v5, v6)) => {
                if wanted("C5") {
                    report("C5", Ok(v5));
                }
                if wanted("C6") {
                    report("C6", Ok(v6));
                }
            }
            Err(e) => {
                let msg = format!("{e:#}");
                for id in ["C5", "C6"].into_iter().filter(|id| wanted(id)) {
                    report(id, Err(anyhow::anyhow!(msg.clone())));
                }
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
