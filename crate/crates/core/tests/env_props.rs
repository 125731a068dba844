mod common;

use common::reference::{fuzz, oracle_success, random_action, RefEpisode};
use proptest::prelude::*;
use qweblab::env::{read_trace, EnvKind, EpisodeConfig, TraceRecord, TraceWriter, WebEnv};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn step_semantics_match_reference_interpreter() {
    let report = fuzz(10_000, 17);
    assert!(report.actions >= 10_000);
    assert!(report.mismatches.is_empty(), "{:#?}", report.mismatches);
}

#[test]
fn oracle_solves_every_environment() {
    for kind in EnvKind::ALL {
        assert_eq!(oracle_success(kind, 0..100), 1.0, "{}", kind.name());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_finishes_from_random_reachable_states(env_idx in 0usize..6, seed in 0u64..10_000, k in 0usize..6) {
        let kind = EnvKind::ALL[env_idx];
        let cfg = EpisodeConfig { max_steps: Some(100), ..EpisodeConfig::default().with_seed(seed) };
        let mut env = WebEnv::new(kind.name(), cfg).unwrap();
        let task = env.reset().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..k {
            let a = random_action(&mut rng, env.state().unwrap(), task.instruction.len());
            if env.step(a).unwrap().done {
                return Ok(());
            }
        }
        let budget = task.goal.relevant.len() + 1;
        for used in 1..=budget {
            let out = env.step(env.oracle_action(None).unwrap()).unwrap();
            if out.done {
                prop_assert_eq!(out.success, Some(true), "{} finished unsuccessfully after {} oracle steps", kind.name(), used);
                return Ok(());
            }
        }
        prop_assert!(false, "{} oracle needed more than {} steps", kind.name(), budget);
    }

    #[test]
    fn terminal_rewards_are_exactly_plus_or_minus_one_plus_penalty(env_idx in 0usize..6, seed in 0u64..10_000) {
        let kind = EnvKind::ALL[env_idx];
        let mut env = WebEnv::new(kind.name(), EpisodeConfig::default().with_seed(seed)).unwrap();
        let task = env.reset().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let out = env.step(random_action(&mut rng, env.state().unwrap(), task.instruction.len())).unwrap();
            if out.done {
                let expected = if out.success == Some(true) { 0.9 } else { -1.1 };
                prop_assert!((out.reward - expected).abs() < 1e-12);
                break;
            }
            prop_assert!((out.reward + 0.1).abs() < 1e-12);
        }
    }
}

#[test]
fn replaying_a_logged_trace_reproduces_rewards() {
    for kind in EnvKind::ALL {
        let cfg = EpisodeConfig { shaping_enabled: true, ..EpisodeConfig::default().with_seed(5) };
        let mut env = WebEnv::new(kind.name(), cfg.clone()).unwrap();
        let task = env.reset().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut writer = TraceWriter::new(Vec::new());
        let mut t = 0;
        loop {
            let a = random_action(&mut rng, env.state().unwrap(), task.instruction.len());
            let out = env.step(a).unwrap();
            writer
                .record(&TraceRecord { t, action: a, reward: out.reward, done: out.done, success: out.success })
                .unwrap();
            t += 1;
            if out.done {
                break;
            }
        }
        let log = read_trace(writer.into_inner().as_slice()).unwrap();
        let mut replay = WebEnv::new(kind.name(), cfg.clone()).unwrap();
        replay.start(task.clone());
        let mut reference = RefEpisode::new(&task, &cfg);
        for rec in &log {
            let out = replay.step(rec.action).unwrap();
            assert_eq!(out.reward, rec.reward);
            assert_eq!((out.done, out.success), (rec.done, rec.success));
            let (r, done, success) = reference.step(rec.action);
            assert!((r - rec.reward).abs() < 1e-12 && done == rec.done && success == rec.success);
        }
    }
}

#[test]
fn book_flight_from_and_to_always_differ_over_a_thousand_seeds() {
    let mut env = WebEnv::new("book-flight-form", EpisodeConfig::default()).unwrap();
    for _ in 0..1000 {
        let task = env.sample_task();
        let keys: Vec<&str> = task.instruction.fields.iter().map(|f| f.key.as_str()).collect();
        assert_eq!(keys.len(), 3);
        for k in ["from", "to", "date"] {
            assert!(keys.contains(&k));
        }
        assert_ne!(task.instruction.value_of("from"), task.instruction.value_of("to"));
    }
}
