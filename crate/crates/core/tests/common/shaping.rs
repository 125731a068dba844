use qweblab::dom::{Attr, DomElement, DomTree, Goal, Instruction};
use qweblab::env::{potential, CompositeAction, EnvKind, EpisodeConfig, Task, WebEnv, ACTIVE_CLASS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::reference::random_action;

/// Largest deviation between the summed shaping terms of an episode and
/// `gamma * (phi(s_N) - phi(s_0))` over `n` random rollouts.
pub fn telescoping_error(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let kind = EnvKind::ALL[i % EnvKind::ALL.len()];
        let cfg = EpisodeConfig {
            shaping_enabled: true,
            max_steps: Some(20),
            seed: seed.wrapping_add(i as u64),
            ..EpisodeConfig::default()
        };
        let gamma = cfg.gamma;
        let mut env = WebEnv::new(kind.name(), cfg).unwrap();
        let task = env.reset().clone();
        let phi0 = potential(&task.initial, &task.goal).unwrap();
        let mut sum = 0.0;
        loop {
            let a = random_action(&mut rng, env.state().unwrap(), task.instruction.len());
            let out = env.step(a).unwrap();
            sum += out.shaping;
            if out.done {
                let phi_n = potential(&out.next_state, &task.goal).unwrap();
                worst = worst.max((sum - gamma * (phi_n - phi0)).abs());
                break;
            }
        }
    }
    worst
}

/// A two-step task: a text box and a two-way radio group must both be set.
pub fn toy_task() -> Task {
    let els = vec![
        DomElement::node(0, "div", vec![1, 2, 3, 4, 5]),
        DomElement::leaf(1, "input").with_attr(Attr::Name, "user"),
        DomElement::leaf(2, "input").with_attr(Attr::Class, "radio").with_attr(Attr::Text, "a").in_group(1),
        DomElement::leaf(3, "input").with_attr(Attr::Class, "radio").with_attr(Attr::Text, "b").in_group(1),
        DomElement::leaf(4, "span").with_attr(Attr::Text, "hint"),
        DomElement::leaf(5, "button").with_attr(Attr::Text, "submit"),
    ];
    let initial = DomTree::new(0, els).unwrap();
    let goal = initial
        .with_attr(1, Attr::Value, "ann")
        .unwrap()
        .with_attr(3, Attr::Class, format!("radio {ACTIVE_CLASS}"))
        .unwrap();
    Task {
        instruction: Instruction::from_pairs([("user", "ann")]).unwrap(),
        initial,
        goal: Goal::new(goal, vec![1, 2, 3]).unwrap(),
        terminal: vec![5],
        max_steps: 2,
    }
}

fn actions(tree: &DomTree) -> Vec<CompositeAction> {
    tree.leaf_elements()
        .into_iter()
        .flat_map(|e| [CompositeAction::click(e), CompositeAction::type_field(e, 0)])
        .collect()
}

/// Optimal action values of every action from the env's current state, by
/// exhaustive finite-horizon recursion.
fn q_values(env: &WebEnv, gamma: f64) -> Vec<f64> {
    actions(env.state().unwrap())
        .into_iter()
        .map(|a| {
            let mut next = env.clone();
            let out = next.step(a).unwrap();
            if out.done {
                out.reward
            } else {
                out.reward + gamma * q_values(&next, gamma).into_iter().fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect()
}

fn argmax_set(q: &[f64]) -> Vec<usize> {
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..q.len()).filter(|&i| q[i] >= best - 1e-9).collect()
}

/// Checks, in every state reachable on the toy task, that each action optimal
/// under shaping is also optimal without it, and that the two optimal sets
/// coincide wherever the unshaped optimum is unique. Returns the number of
/// states compared.
pub fn toy_policy_invariance() -> Result<usize, String> {
    let mut compared = 0;
    let mut frontier = Vec::new();
    for shaping in [false, true] {
        let cfg = EpisodeConfig { shaping_enabled: shaping, ..EpisodeConfig::default() };
        let mut env = WebEnv::new("click-dialog", cfg).unwrap();
        env.start(toy_task());
        frontier.push(env);
    }
    let gamma = EpisodeConfig::default().gamma;
    while let Some(plain) = frontier.first().cloned() {
        let shaped = frontier[1].clone();
        frontier.drain(..2);
        let (qp, qs) = (q_values(&plain, gamma), q_values(&shaped, gamma));
        let (bp, bs) = (argmax_set(&qp), argmax_set(&qs));
        if !bs.iter().all(|a| bp.contains(a)) || (bp.len() == 1 && bp != bs) {
            return Err(format!(
                "state at t={} differs: plain {:?} shaped {:?}",
                plain.steps_taken(),
                bp,
                bs
            ));
        }
        compared += 1;
        for a in actions(plain.state().unwrap()) {
            let (mut p, mut s) = (plain.clone(), shaped.clone());
            let done = p.step(a).unwrap().done;
            s.step(a).unwrap();
            if !done {
                frontier.push(p);
                frontier.push(s);
            }
        }
    }
    Ok(compared)
}
