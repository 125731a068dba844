use super::tape::{Tape, Var};
use super::tensor::{ParamId, ParamStore};
use super::NnError;

/// One LSTM direction. Gate order is input, forget, cell, output.
#[derive(Clone, Copy, Debug)]
pub struct Lstm {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl Lstm {
    pub fn new(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize) -> Result<Self, NnError> {
        let w_ih = store.fan_in(&format!("{prefix}.w_ih"), 4 * hidden, input)?;
        let w_hh = store.fan_in(&format!("{prefix}.w_hh"), 4 * hidden, hidden)?;
        let bias = store.zeros(&format!("{prefix}.b"), vec![4 * hidden])?;
        let b = &mut store.get_mut(bias).data;
        for v in &mut b[hidden..2 * hidden] {
            *v = 1.0;
        }
        Ok(Lstm {
            w_ih,
            w_hh,
            bias,
            input,
            hidden,
        })
    }

    /// Hidden states for `xs` (`[T, input]`), in input order when run forwards
    /// and in reversed order when `reverse` is set (index `t` still refers to position `t`).
    fn run(&self, tape: &mut Tape, store: &ParamStore, xs: Var, reverse: bool) -> Vec<Var> {
        let (t_len, _) = tape.shape(xs);
        let h = self.hidden;
        let proj = tape.affine(store, self.w_ih, Some(self.bias), xs);
        let mut hs = vec![None; t_len];
        let mut hv = tape.zeros(1, h);
        let mut cv = tape.zeros(1, h);
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..t_len).rev())
        } else {
            Box::new(0..t_len)
        };
        for t in order {
            let x = tape.row(proj, t);
            let rec = tape.affine(store, self.w_hh, None, hv);
            let z = tape.add(x, rec);
            let hc = tape.lstm_cell(z, cv);
            hv = tape.slice(hc, 0, h);
            cv = tape.slice(hc, h, h);
            hs[t] = Some(hv);
        }
        hs.into_iter().map(|v| v.expect("every position visited")).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BiLstm {
    pub fwd: Lstm,
    pub bwd: Lstm,
}

impl BiLstm {
    pub fn new(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize) -> Result<Self, NnError> {
        Ok(BiLstm {
            fwd: Lstm::new(store, &format!("{prefix}.fwd"), input, hidden)?,
            bwd: Lstm::new(store, &format!("{prefix}.bwd"), input, hidden)?,
        })
    }

    pub fn output_width(&self) -> usize {
        2 * self.fwd.hidden
    }

    /// `[T, input] -> [T, 2·hidden]`, forward state first in each row.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, xs: Var) -> Result<Var, NnError> {
        let (t_len, w) = tape.shape(xs);
        if t_len == 0 {
            return Err(NnError::EmptySequence);
        }
        if w != self.fwd.input {
            return Err(NnError::Shape(format!("bilstm expects width {}, got {w}", self.fwd.input)));
        }
        let f = self.fwd.run(tape, store, xs, false);
        let b = self.bwd.run(tape, store, xs, true);
        let rows: Vec<Var> = f.iter().zip(&b).map(|(&x, &y)| tape.concat(&[x, y])).collect();
        Ok(tape.stack(&rows))
    }
}

/// biLSTM over a list of equal-width vectors; one output row per position.
pub fn bilstm(tape: &mut Tape, store: &ParamStore, net: &BiLstm, sequence: &[Var]) -> Result<Vec<Var>, NnError> {
    if sequence.is_empty() {
        return Err(NnError::EmptySequence);
    }
    let xs = tape.stack(sequence);
    let out = net.forward(tape, store, xs)?;
    Ok((0..sequence.len()).map(|t| tape.row(out, t)).collect())
}
