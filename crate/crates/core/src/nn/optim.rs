use serde::{Deserialize, Serialize};

use super::tensor::{Grads, ParamStore};
use super::NnError;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct AdamState {
    pub t: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam(Adam),
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam(Adam::default())
    }
}

impl Optimizer {
    pub fn step(&self, store: &mut ParamStore, grads: &Grads) -> Result<(), NnError> {
        match self {
            Optimizer::Sgd { lr } => sgd_step(store, grads, *lr),
            Optimizer::Adam(a) => adam_step(store, grads, a),
        }
    }
}

fn check(store: &ParamStore, grads: &Grads) -> Result<(), NnError> {
    if grads.bufs.len() != store.len() {
        return Err(NnError::Shape(format!(
            "{} gradient buffers for {} parameters",
            grads.bufs.len(),
            store.len()
        )));
    }
    for id in store.ids() {
        let g = grads.get(id);
        if g.len() != store.get(id).len() {
            return Err(NnError::Shape(format!("gradient size mismatch for {}", store.name(id))));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFiniteGradient(store.name(id).to_string()));
        }
    }
    Ok(())
}

pub fn sgd_step(store: &mut ParamStore, grads: &Grads, lr: f64) -> Result<(), NnError> {
    check(store, grads)?;
    for id in store.ids().collect::<Vec<_>>() {
        let g = grads.get(id);
        for (p, d) in store.get_mut(id).data.iter_mut().zip(g) {
            *p -= lr * d;
        }
    }
    Ok(())
}

pub fn adam_step(store: &mut ParamStore, grads: &Grads, cfg: &Adam) -> Result<(), NnError> {
    check(store, grads)?;
    let mut st = store.adam.take().unwrap_or_else(|| AdamState {
        t: 0,
        m: grads.bufs.iter().map(|b| vec![0.0; b.len()]).collect(),
        v: grads.bufs.iter().map(|b| vec![0.0; b.len()]).collect(),
    });
    st.t += 1;
    let c1 = 1.0 - cfg.beta1.powi(st.t as i32);
    let c2 = 1.0 - cfg.beta2.powi(st.t as i32);
    for id in store.ids().collect::<Vec<_>>() {
        let g = grads.get(id);
        let (m, v) = (&mut st.m[id.0], &mut st.v[id.0]);
        let p = &mut store.get_mut(id).data;
        for k in 0..g.len() {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            p[k] -= cfg.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + cfg.eps);
        }
    }
    store.adam = Some(st);
    Ok(())
}
