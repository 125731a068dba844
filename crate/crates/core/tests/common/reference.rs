//! A naive second interpreter of the environment rules, working on a plain
//! map view of the page decoded from its JSON form.

use std::collections::BTreeMap;

use qweblab::dom::DomTree;
use qweblab::env::{CompositeAction, EnvKind, EpisodeConfig, Task, Verb, WebEnv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

#[derive(Clone, Debug, PartialEq)]
pub struct RefEl {
    pub attrs: BTreeMap<String, String>,
    pub children: Vec<u32>,
    pub group: Option<u64>,
    pub leaf: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefPage {
    pub els: BTreeMap<u32, RefEl>,
}

impl RefPage {
    pub fn from_tree(tree: &DomTree) -> RefPage {
        let v: Value = serde_json::from_str(&tree.to_json()).unwrap();
        let mut els = BTreeMap::new();
        for e in v["elements"].as_array().unwrap() {
            let mut attrs = BTreeMap::new();
            for (k, val) in e["attrs"].as_object().unwrap() {
                attrs.insert(k.clone(), val.as_str().unwrap().to_string());
            }
            els.insert(
                e["id"].as_u64().unwrap() as u32,
                RefEl {
                    attrs,
                    children: e["children"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap() as u32).collect(),
                    group: e["group"].as_u64(),
                    leaf: e["leaf"].as_bool().unwrap(),
                },
            );
        }
        RefPage { els }
    }

    fn attr(&self, id: u32, name: &str) -> String {
        self.els[&id].attrs.get(name).cloned().unwrap_or_default()
    }

    fn set(&mut self, id: u32, name: &str, value: String) {
        let attrs = &mut self.els.get_mut(&id).unwrap().attrs;
        if value.is_empty() {
            attrs.remove(name);
        } else {
            attrs.insert(name.to_string(), value);
        }
    }

    fn parent(&self, id: u32) -> Option<u32> {
        self.els.iter().find(|(_, e)| e.children.contains(&id)).map(|(&p, _)| p)
    }

    fn classes(&self, id: u32) -> Vec<String> {
        self.attr(id, "class").split_whitespace().map(str::to_string).collect()
    }

    fn set_active(&mut self, id: u32, on: bool) {
        let mut cls: Vec<String> = self.classes(id).into_iter().filter(|c| c != "active").collect();
        if on {
            cls.push("active".into());
        }
        self.set(id, "class", cls.join(" "));
    }

    /// `None` when the action is rejected.
    pub fn apply(&self, values: &[String], a: CompositeAction) -> Option<RefPage> {
        let el = self.els.get(&a.element)?;
        if !el.leaf {
            return None;
        }
        let mut next = self.clone();
        let tag = self.attr(a.element, "tag");
        match a.verb {
            Verb::Type => {
                let value = values.get(a.field_index?)?;
                if tag == "input" && el.group.is_none() {
                    next.set(a.element, "value", value.clone());
                }
            }
            Verb::Click => {
                if a.field_index.is_some() {
                    return None;
                }
                if let Some(g) = el.group {
                    let p = self.parent(a.element).unwrap();
                    for c in &self.els[&p].children {
                        if self.els[c].group == Some(g) {
                            next.set_active(*c, *c == a.element);
                        }
                    }
                } else if tag == "button" || tag == "a" {
                    let cls = self.classes(a.element);
                    let on = if cls.iter().any(|c| c == "toggle") {
                        !cls.iter().any(|c| c == "active")
                    } else {
                        true
                    };
                    next.set_active(a.element, on);
                }
            }
        }
        Some(next)
    }
}

pub struct RefEpisode {
    pub page: RefPage,
    goal: RefPage,
    relevant: Vec<u32>,
    terminal: Vec<u32>,
    values: Vec<String>,
    t: usize,
    max_steps: usize,
    cfg: EpisodeConfig,
}

impl RefEpisode {
    pub fn new(task: &Task, cfg: &EpisodeConfig) -> RefEpisode {
        RefEpisode {
            page: RefPage::from_tree(&task.initial),
            goal: RefPage::from_tree(&task.goal.tree),
            relevant: task.goal.relevant.clone(),
            terminal: task.terminal.clone(),
            values: task.instruction.fields.iter().map(|f| f.value.clone()).collect(),
            t: 0,
            max_steps: cfg.max_steps.unwrap_or(task.max_steps),
            cfg: cfg.clone(),
        }
    }

    fn potential(&self, page: &RefPage) -> f64 {
        let hits = self.relevant.iter().filter(|id| page.els[id].attrs == self.goal.els[id].attrs).count();
        hits as f64 / self.relevant.len() as f64
    }

    /// `(reward, done, success)`.
    pub fn step(&mut self, a: CompositeAction) -> (f64, bool, Option<bool>) {
        let applied = self.page.apply(&self.values, a);
        let valid = applied.is_some();
        let next = applied.unwrap_or_else(|| self.page.clone());
        self.t += 1;
        let done = (valid && a.verb == Verb::Click && self.terminal.contains(&a.element)) || self.t >= self.max_steps;
        let mut r = self.cfg.step_penalty;
        let mut success = None;
        if done {
            let ok = self.potential(&next) == 1.0;
            r += if ok { 1.0 } else { -1.0 };
            success = Some(ok);
        }
        if self.cfg.shaping_enabled {
            r += self.cfg.gamma * (self.potential(&next) - self.potential(&self.page));
        }
        self.page = next;
        (r, done, success)
    }
}

/// Mostly legal actions with a share of rejected ones mixed in.
pub fn random_action(rng: &mut ChaCha8Rng, tree: &DomTree, fields: usize) -> CompositeAction {
    let ids = tree.linearize();
    let element = match rng.gen_range(0..10) {
        0 => rng.gen_range(0..200),
        1 => ids[rng.gen_range(0..ids.len())],
        _ => {
            let leaves = tree.leaf_elements();
            leaves[rng.gen_range(0..leaves.len())]
        }
    };
    match rng.gen_range(0..12) {
        0 => CompositeAction { element, verb: Verb::Type, field_index: None },
        1 => CompositeAction { element, verb: Verb::Click, field_index: Some(0) },
        2 => CompositeAction::type_field(element, fields + rng.gen_range(0..2)),
        3..=6 => CompositeAction::type_field(element, rng.gen_range(0..fields)),
        _ => CompositeAction::click(element),
    }
}

pub struct FuzzReport {
    pub actions: usize,
    pub mismatches: Vec<String>,
}

/// Drives every environment and the reference side by side for `total`
/// actions, in episodes of up to 50 steps.
pub fn fuzz(total: usize, seed: u64) -> FuzzReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = Vec::new();
    let mut actions = 0;
    let mut episode = 0u64;
    while actions < total {
        let kind = EnvKind::ALL[episode as usize % EnvKind::ALL.len()];
        let cfg = EpisodeConfig {
            max_steps: Some(50),
            shaping_enabled: episode % 2 == 1,
            seed: seed.wrapping_add(episode),
            ..EpisodeConfig::default()
        };
        episode += 1;
        let mut env = WebEnv::new(kind.name(), cfg.clone()).unwrap();
        let task = env.reset().clone();
        let mut reference = RefEpisode::new(&task, &cfg);
        loop {
            let a = random_action(&mut rng, env.state().unwrap(), task.instruction.len());
            let out = env.step(a).unwrap();
            let (r, done, success) = reference.step(a);
            actions += 1;
            let page = RefPage::from_tree(&out.next_state);
            if page != reference.page || (out.reward - r).abs() > 1e-12 || out.done != done || out.success != success {
                mismatches.push(format!(
                    "{} seed {} action {a:?}: env ({}, {}, {:?}) reference ({r}, {done}, {success:?})",
                    kind.name(),
                    cfg.seed,
                    out.reward,
                    out.done,
                    out.success
                ));
                break;
            }
            if done || actions >= total {
                break;
            }
        }
    }
    FuzzReport { actions, mismatches }
}

/// Fraction of `seeds` on which repeated oracle actions finish successfully.
pub fn oracle_success(kind: EnvKind, seeds: std::ops::Range<u64>) -> f64 {
    let n = seeds.end - seeds.start;
    let mut wins = 0;
    for seed in seeds {
        let mut env = WebEnv::new(kind.name(), EpisodeConfig::default().with_seed(seed)).unwrap();
        env.reset();
        loop {
            let a = env.oracle_action(None).unwrap();
            let out = env.step(a).unwrap();
            if out.done {
                wins += usize::from(out.success == Some(true));
                break;
            }
        }
    }
    wins as f64 / n as f64
}
