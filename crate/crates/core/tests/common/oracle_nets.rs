//! Loop-based forward passes of QWeb and INET that read parameters by name.

use qweblab::dom::{DomTree, Instruction};
use qweblab::nn::ParamStore;
use qweblab::qweb::{shallow_features, Vocab};
use qweblab::text::tokenize;

fn p<'a>(store: &'a ParamStore, name: &str) -> &'a [f64] {
    &store.by_name(name).unwrap_or_else(|| panic!("missing {name}")).data
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `W x + b` with `W` row-major `[out, in]`.
fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    b.iter()
        .enumerate()
        .map(|(o, bo)| bo + (0..n).map(|i| w[o * n + i] * x[i]).sum::<f64>())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Mean over non-empty groups of each group's mean embedding row.
fn bag(table: &[f64], d: usize, groups: &[Vec<usize>]) -> Vec<f64> {
    let groups: Vec<&Vec<usize>> = groups.iter().filter(|g| !g.is_empty()).collect();
    let mut out = vec![0.0; d];
    for g in &groups {
        for &id in g.iter() {
            for j in 0..d {
                out[j] += table[id * d + j] / (g.len() * groups.len()) as f64;
            }
        }
    }
    out
}

fn lstm_dir(store: &ParamStore, prefix: &str, xs: &[Vec<f64>], reverse: bool) -> Vec<Vec<f64>> {
    let w_ih = p(store, &format!("{prefix}.w_ih"));
    let w_hh = p(store, &format!("{prefix}.w_hh"));
    let b = p(store, &format!("{prefix}.b"));
    let h = b.len() / 4;
    let mut hv = vec![0.0; h];
    let mut cv = vec![0.0; h];
    let mut out = vec![Vec::new(); xs.len()];
    let order: Vec<usize> = if reverse { (0..xs.len()).rev().collect() } else { (0..xs.len()).collect() };
    for t in order {
        let a = affine(w_ih, b, &xs[t]);
        let r = affine(w_hh, &vec![0.0; 4 * h], &hv);
        let z: Vec<f64> = a.iter().zip(&r).map(|(x, y)| x + y).collect();
        for j in 0..h {
            let i = sigmoid(z[j]);
            let f = sigmoid(z[h + j]);
            let g = z[2 * h + j].tanh();
            let o = sigmoid(z[3 * h + j]);
            cv[j] = f * cv[j] + i * g;
            hv[j] = o * cv[j].tanh();
        }
        out[t] = hv.clone();
    }
    out
}

fn bilstm(store: &ParamStore, prefix: &str, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let f = lstm_dir(store, &format!("{prefix}.fwd"), xs, false);
    let b = lstm_dir(store, &format!("{prefix}.bwd"), xs, true);
    f.into_iter().zip(b).map(|(mut x, y)| {
        x.extend(y);
        x
    }).collect()
}

fn attr_groups(vocab: &Vocab, tree: &DomTree, id: u32) -> Vec<Vec<usize>> {
    tree.get(id)
        .unwrap()
        .attrs
        .iter()
        .map(|(_, v)| tokenize(v))
        .filter(|t| !t.is_empty())
        .map(|t| t.iter().map(|w| vocab.id(w)).collect())
        .collect()
}

pub struct QOracle {
    pub q_dom: Vec<f64>,
    pub q_click_type: Vec<[f64; 2]>,
    pub q_type: Vec<Vec<f64>>,
    pub attention: Vec<f64>,
}

/// QWeb with single-affine heads (`head_hidden = 0`).
pub fn qweb_forward(store: &ParamStore, vocab: &Vocab, ins: &Instruction, tree: &DomTree, shallow: bool) -> QOracle {
    let table = p(store, "qweb.embed");
    let d = table.len() / vocab.len();
    let ids = |s: &str| -> Vec<usize> { tokenize(s).iter().map(|w| vocab.id(w)).collect() };
    let fields: Vec<Vec<f64>> = ins
        .fields
        .iter()
        .map(|f| {
            let mut kv = bag(table, d, &[ids(&f.key)]);
            kv.extend(bag(table, d, &[ids(&f.value)]));
            affine(p(store, "qweb.field_fc.w"), p(store, "qweb.field_fc.b"), &kv)
                .into_iter()
                .map(|v| v.max(0.0))
                .collect()
        })
        .collect();
    let u = p(store, "qweb.attn_u");
    let att = softmax(&fields.iter().map(|f| dot(u, f)).collect::<Vec<_>>());

    let order = tree.linearize().to_vec();
    let xs: Vec<Vec<f64>> = order
        .iter()
        .map(|&id| {
            let mut x = bag(table, d, &attr_groups(vocab, tree, id));
            let mut ec = vec![0.0; d];
            for (fi, f) in ins.fields.iter().enumerate() {
                let value: Vec<String> = tokenize(&f.value);
                let groups: Vec<Vec<usize>> = tree
                    .get(id)
                    .unwrap()
                    .attrs
                    .iter()
                    .map(|(_, v)| tokenize(v))
                    .filter(|t| !t.is_empty())
                    .map(|t| t.iter().filter(|w| value.contains(w)).map(|w| vocab.id(w)).collect())
                    .collect();
                let e = bag(table, d, &groups);
                for j in 0..d {
                    ec[j] += att[fi] * e[j];
                }
            }
            x.extend(ec);
            x
        })
        .collect();
    let hs = bilstm(store, "qweb.lstm", &xs);
    let leaves: Vec<usize> = (0..order.len()).filter(|&i| tree.get(order[i]).unwrap().is_leaf).collect();
    let reps: Vec<Vec<f64>> = leaves
        .iter()
        .map(|&i| {
            affine(p(store, "qweb.dom_fc.w"), p(store, "qweb.dom_fc.b"), &hs[i])
                .into_iter()
                .map(f64::tanh)
                .collect()
        })
        .collect();
    let m: Vec<Vec<f64>> = reps.iter().map(|r| fields.iter().map(|f| dot(r, f)).collect()).collect();
    let (wd, bd) = (p(store, "qweb.q_dom.fc.w"), p(store, "qweb.q_dom.fc.b"));
    let (wc, bc) = (p(store, "qweb.q_click.fc.w"), p(store, "qweb.q_click.fc.b"));
    let mut q_dom: Vec<f64> = m.iter().map(|row| row.iter().map(|x| wd[0] * x + bd[0]).sum()).collect();
    let q_click_type = m
        .iter()
        .map(|row| [0, 1].map(|c| row.iter().map(|x| wc[c] * x + bc[c]).sum::<f64>()))
        .collect();
    let mut q_type = m.clone();
    if shallow {
        let feats = shallow_features(ins, tree);
        let su = sigmoid(p(store, "qweb.gate_u")[0]);
        let sv = sigmoid(p(store, "qweb.gate_v")[0]);
        let (sdw, sdb, sds) = (p(store, "qweb.shallow.dom_fc.w"), p(store, "qweb.shallow.dom_fc.b"), p(store, "qweb.shallow.dom_scale")[0]);
        let (stw, stb, sts) = (p(store, "qweb.shallow.type_fc.w"), p(store, "qweb.shallow.type_fc.b"), p(store, "qweb.shallow.type_scale")[0]);
        for l in 0..leaves.len() {
            let mut sum = vec![0.0; sdw.len()];
            for f in 0..ins.len() {
                let x = feats.get(f, l);
                for j in 0..sum.len() {
                    sum[j] += x[j];
                }
                let qs = sts * (dot(stw, x) + stb[0]).tanh();
                q_type[l][f] = q_type[l][f] * (1.0 - sv) + qs * sv;
            }
            let qs = sds * (dot(sdw, &sum) + sdb[0]).tanh();
            q_dom[l] = q_dom[l] * (1.0 - su) + qs * su;
        }
    }
    QOracle { q_dom, q_click_type, q_type, attention: att }
}

pub struct InetOracle {
    pub q_elements: Vec<f64>,
    pub q_attributes: Vec<f64>,
    pub attention: Vec<f64>,
}

pub fn inet_forward(store: &ParamStore, vocab: &Vocab, goal: &DomTree, key: &str) -> InetOracle {
    let table = p(store, "inet.embed");
    let d = table.len() / vocab.len();
    let key_ids: Vec<usize> = tokenize(key).iter().map(|w| vocab.id(w)).collect();
    let key_vec: Vec<f64> = affine(p(store, "inet.key_fc.w"), p(store, "inet.key_fc.b"), &bag(table, d, &[key_ids]))
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    let xs: Vec<Vec<f64>> = goal.linearize().iter().map(|&id| bag(table, d, &attr_groups(vocab, goal, id))).collect();
    let reps: Vec<Vec<f64>> = bilstm(store, "inet.lstm", &xs)
        .iter()
        .map(|h| {
            affine(p(store, "inet.element_fc.w"), p(store, "inet.element_fc.b"), h)
                .into_iter()
                .map(f64::tanh)
                .collect()
        })
        .collect();
    let q_elements: Vec<f64> = reps.iter().map(|r| dot(&key_vec, r)).collect();
    let attention = softmax(&q_elements);
    let mut joint = vec![0.0; key_vec.len()];
    for (a, r) in attention.iter().zip(&reps) {
        for j in 0..joint.len() {
            joint[j] += a * r[j];
        }
    }
    joint.extend(key_vec.iter().copied());
    let q_attributes = affine(p(store, "inet.attr_fc.w"), p(store, "inet.attr_fc.b"), &joint);
    InetOracle { q_elements, q_attributes, attention }
}
