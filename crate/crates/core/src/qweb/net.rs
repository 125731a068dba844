use serde::{Deserialize, Serialize};

use crate::nn::{BiLstm, Linear, NnError, ParamId, ParamStore, Tape, Var};

use super::encode::{EncodedState, SHALLOW_DIM};
use super::select::QValues;
use super::vocab::Vocab;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QWebConfig {
    pub embed_dim: usize,
    pub lstm_hidden: usize,
    pub field_dim: usize,
    /// Hidden width of the per-entry head networks; 0 means a single affine map.
    pub head_hidden: usize,
    pub shallow: bool,
}

impl Default for QWebConfig {
    fn default() -> Self {
        QWebConfig {
            embed_dim: 32,
            lstm_hidden: 32,
            field_dim: 32,
            head_hidden: 0,
            shallow: false,
        }
    }
}

/// Per-entry scalar network applied to every element of a column.
#[derive(Clone, Copy, Debug)]
struct EntryHead {
    first: Linear,
    second: Option<Linear>,
}

impl EntryHead {
    fn new(store: &mut ParamStore, prefix: &str, hidden: usize, out: usize) -> Result<Self, NnError> {
        if hidden == 0 {
            return Ok(EntryHead {
                first: Linear::new(store, &format!("{prefix}.fc"), 1, out)?,
                second: None,
            });
        }
        Ok(EntryHead {
            first: Linear::new(store, &format!("{prefix}.fc1"), 1, hidden)?,
            second: Some(Linear::new(store, &format!("{prefix}.fc2"), hidden, out)?),
        })
    }

    fn forward(&self, tape: &mut Tape, store: &ParamStore, col: Var) -> Var {
        let h = self.first.forward(tape, store, col);
        match self.second {
            None => h,
            Some(l) => {
                let a = tape.relu(h);
                l.forward(tape, store, a)
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Shallow {
    dom_fc: Linear,
    type_fc: Linear,
    dom_scale: ParamId,
    type_scale: ParamId,
    gate_u: ParamId,
    gate_v: ParamId,
}

/// Tape handles of the three heads for one state.
#[derive(Clone, Copy, Debug)]
pub struct QVars {
    /// `[leaves, 1]`
    pub q_dom: Var,
    /// `[leaves, 2]`, click then type
    pub q_click_type: Var,
    /// `[leaves, fields]`
    pub q_type: Var,
    pub leaves: usize,
    pub fields: usize,
}

impl QVars {
    /// Composite value of `(leaf, verb, field)` as a tape scalar.
    pub fn composite(&self, tape: &mut Tape, leaf: usize, verb: usize, field: Option<usize>) -> Var {
        let d = tape.pick(self.q_dom, leaf);
        let c = tape.pick(self.q_click_type, leaf * 2 + verb);
        let dc = tape.add(d, c);
        match field {
            Some(f) if verb == 1 => {
                let t = tape.pick(self.q_type, leaf * self.fields + f);
                tape.add(dc, t)
            }
            _ => dc,
        }
    }

    pub fn values(&self, tape: &Tape) -> QValues {
        QValues::new(
            tape.value(self.q_dom).to_vec(),
            tape.value(self.q_click_type).chunks(2).map(|c| [c[0], c[1]]).collect(),
            tape.value(self.q_type).chunks(self.fields.max(1)).map(<[f64]>::to_vec).collect(),
        )
    }
}

/// The navigator Q-network. Parameters live in a separate [`ParamStore`].
#[derive(Clone, Debug)]
pub struct QWebNet {
    pub config: QWebConfig,
    pub vocab: Vocab,
    embed: ParamId,
    field_fc: Linear,
    attn_u: ParamId,
    lstm: BiLstm,
    dom_fc: Linear,
    dom_head: EntryHead,
    click_head: EntryHead,
    shallow: Option<Shallow>,
}

impl QWebNet {
    pub fn new(config: QWebConfig, vocab: Vocab, store: &mut ParamStore) -> Result<Self, NnError> {
        let d = config.embed_dim;
        let embed = store.uniform("qweb.embed", vec![vocab.len(), d], 0.1)?;
        let field_fc = Linear::new(store, "qweb.field_fc", 2 * d, config.field_dim)?;
        let attn_u = store.uniform("qweb.attn_u", vec![config.field_dim], 1.0 / (config.field_dim as f64).sqrt())?;
        let lstm = BiLstm::new(store, "qweb.lstm", 2 * d, config.lstm_hidden)?;
        let dom_fc = Linear::new(store, "qweb.dom_fc", 2 * config.lstm_hidden, config.field_dim)?;
        let dom_head = EntryHead::new(store, "qweb.q_dom", config.head_hidden, 1)?;
        let click_head = EntryHead::new(store, "qweb.q_click", config.head_hidden, 2)?;
        let shallow = if config.shallow {
            Some(Shallow {
                dom_fc: Linear::new(store, "qweb.shallow.dom_fc", SHALLOW_DIM, 1)?,
                type_fc: Linear::new(store, "qweb.shallow.type_fc", SHALLOW_DIM, 1)?,
                dom_scale: store.constant("qweb.shallow.dom_scale", vec![1], 1.0)?,
                type_scale: store.constant("qweb.shallow.type_scale", vec![1], 1.0)?,
                gate_u: store.zeros("qweb.gate_u", vec![1])?,
                gate_v: store.zeros("qweb.gate_v", vec![1])?,
            })
        } else {
            None
        };
        Ok(QWebNet {
            config,
            vocab,
            embed,
            field_fc,
            attn_u,
            lstm,
            dom_fc,
            dom_head,
            click_head,
            shallow,
        })
    }

    pub fn encode(&self, instruction: &crate::dom::Instruction, tree: &crate::dom::DomTree) -> EncodedState {
        EncodedState::new(&self.vocab, instruction, tree)
    }

    /// Field vectors `relu(FC([mean emb key; mean emb value]))`, one row each.
    pub fn encode_instruction(&self, tape: &mut Tape, store: &ParamStore, s: &EncodedState) -> Result<Vec<Var>, NnError> {
        let ins = &s.instruction;
        let mut out = Vec::with_capacity(ins.num_fields());
        for f in 0..ins.num_fields() {
            let k = tape.embed_bag(store, self.embed, &[&ins.keys[f]])?;
            let v = tape.embed_bag(store, self.embed, &[&ins.values[f]])?;
            let kv = tape.concat(&[k, v]);
            let h = self.field_fc.forward(tape, store, kv);
            out.push(tape.relu(h));
        }
        Ok(out)
    }

    /// Attention weights over fields and the per-element conditional vectors `E_C`.
    pub fn encode_intersection(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        s: &EncodedState,
        fields: &[Var],
    ) -> Result<(Var, Vec<Var>), NnError> {
        let u = tape.param(store, self.attn_u);
        let logits: Vec<Var> = fields.iter().map(|&f| tape.dot(u, f)).collect();
        let lv = tape.concat(&logits);
        let p = tape.softmax(lv);
        let mut ec = Vec::with_capacity(s.order.len());
        for per_field in &s.overlaps {
            let rows: Vec<Var> = per_field
                .iter()
                .map(|groups| tape.embed_bag(store, self.embed, groups))
                .collect::<Result<_, _>>()?;
            let m = tape.stack(&rows);
            ec.push(tape.vecmat(p, m));
        }
        Ok((p, ec))
    }

    /// `tanh(FC(biLSTM([emb; E_C])))` for every leaf, as a `[leaves, field_dim]` value.
    pub fn encode_dom(&self, tape: &mut Tape, store: &ParamStore, s: &EncodedState, ec: &[Var]) -> Result<Var, NnError> {
        let mut rows = Vec::with_capacity(s.order.len());
        for (i, groups) in s.attr_tokens.iter().enumerate() {
            let e = tape.embed_bag(store, self.embed, groups)?;
            rows.push(tape.concat(&[e, ec[i]]));
        }
        let xs = tape.stack(&rows);
        let hs = self.lstm.forward(tape, store, xs)?;
        let leaf_rows: Vec<Var> = s.leaf_pos.iter().map(|&p| tape.row(hs, p)).collect();
        let lh = tape.stack(&leaf_rows);
        let z = self.dom_fc.forward(tape, store, lh);
        Ok(tape.tanh(z))
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, s: &EncodedState) -> Result<QVars, NnError> {
        let (nl, nf) = (s.num_leaves(), s.num_fields());
        if nl == 0 || nf == 0 {
            return Err(NnError::EmptySequence);
        }
        let fields = self.encode_instruction(tape, store, s)?;
        let (_, ec) = self.encode_intersection(tape, store, s, &fields)?;
        let reps = self.encode_dom(tape, store, s, &ec)?;
        let fm = tape.stack(&fields);
        let m = tape.matmul_t(reps, fm);
        let col = tape.reshape(m, nl * nf, 1);
        let d = self.dom_head.forward(tape, store, col);
        let mut q_dom = tape.sum_row_groups(d, nf);
        let c = self.click_head.forward(tape, store, col);
        let q_click_type = tape.sum_row_groups(c, nf);
        let mut q_type = m;
        if let Some(sh) = &self.shallow {
            let feats = tape.constant(nl * nf, SHALLOW_DIM, &s.shallow.data);
            let per_leaf = tape.sum_row_groups(feats, nf);
            let zd = sh.dom_fc.forward(tape, store, per_leaf);
            let td = tape.tanh(zd);
            let sd = tape.param(store, sh.dom_scale);
            let qs_dom = tape.mul_scalar(td, sd);
            let zt = sh.type_fc.forward(tape, store, feats);
            let tt = tape.tanh(zt);
            let st = tape.param(store, sh.type_scale);
            let qs_type_col = tape.mul_scalar(tt, st);
            let qs_type = tape.reshape(qs_type_col, nl, nf);
            let gu = tape.param(store, sh.gate_u);
            let gv = tape.param(store, sh.gate_v);
            q_dom = gate(tape, q_dom, qs_dom, gu);
            q_type = gate(tape, q_type, qs_type, gv);
        }
        Ok(QVars {
            q_dom,
            q_click_type,
            q_type,
            leaves: nl,
            fields: nf,
        })
    }

    /// Forward pass returning plain Q values.
    pub fn q_values(&self, store: &ParamStore, s: &EncodedState) -> Result<QValues, NnError> {
        let mut tape = Tape::new();
        self.q_values_with(&mut tape, store, s)
    }

    pub fn q_values_with(&self, tape: &mut Tape, store: &ParamStore, s: &EncodedState) -> Result<QValues, NnError> {
        tape.clear();
        let q = self.forward(tape, store, s)?;
        Ok(q.values(tape))
    }
}

/// `deep·(1−σ(g)) + shallow·σ(g)`.
pub fn gate(tape: &mut Tape, deep: Var, shallow: Var, g: Var) -> Var {
    let s = tape.sigmoid(g);
    let one_minus = tape.one_minus(s);
    let a = tape.mul_scalar(deep, one_minus);
    let b = tape.mul_scalar(shallow, s);
    tape.add(a, b)
}
