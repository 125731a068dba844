//! Reverse-mode tape over row-major 2-D values.
//!
//! Every value is a `[rows, cols]` block in one arena; vectors have one row.
//! Parameter-reading ops refer to the [`ParamStore`] by id and accumulate
//! their gradients straight into a [`Grads`].

use super::tensor::{Grads, ParamId, ParamStore};
use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(u32);

#[derive(Clone, Copy, Debug)]
enum Op {
    Const,
    Param(ParamId),
    Gather { table: ParamId, ids: (usize, usize) },
    Bag { table: ParamId, spec: (usize, usize) },
    Affine { w: ParamId, b: Option<ParamId>, x: Var },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddConst(Var),
    MulScalar(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Square(Var),
    Concat(usize, usize),
    Stack(usize, usize),
    Slice(Var, usize),
    Reshape(Var),
    Dot(Var, Var),
    Sum(Var),
    Mean(Var),
    Softmax(Var),
    MatMulT(Var, Var),
    VecMat(Var, Var),
    SumGroups(Var, usize),
    LstmCell { z: Var, c: Var },
}

#[derive(Clone, Copy, Debug)]
struct Node {
    off: usize,
    rows: usize,
    cols: usize,
    op: Op,
}

impl Node {
    fn len(&self) -> usize {
        self.rows * self.cols
    }
}

#[derive(Default)]
pub struct Tape {
    vals: Vec<f64>,
    nodes: Vec<Node>,
    vars: Vec<Var>,
    ints: Vec<usize>,
    grad: Vec<f64>,
    touched: Vec<bool>,
    scratch: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops all nodes, keeping allocations.
    pub fn clear(&mut self) {
        self.vals.clear();
        self.nodes.clear();
        self.vars.clear();
        self.ints.clear();
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn node(&self, v: Var) -> Node {
        self.nodes[v.0 as usize]
    }

    pub fn value(&self, v: Var) -> &[f64] {
        let n = self.node(v);
        &self.vals[n.off..n.off + n.len()]
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = self.node(v);
        (n.rows, n.cols)
    }

    pub fn size(&self, v: Var) -> usize {
        self.node(v).len()
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let n = self.node(v);
        assert_eq!(n.len(), 1, "scalar() on a non-scalar value");
        self.vals[n.off]
    }

    /// Gradient of the last backward output with respect to `v`.
    pub fn grad(&self, v: Var) -> &[f64] {
        let n = self.node(v);
        &self.grad[n.off..n.off + n.len()]
    }

    fn push(&mut self, rows: usize, cols: usize, op: Op) -> (Var, usize) {
        let off = self.vals.len();
        self.vals.resize(off + rows * cols, 0.0);
        let id = Var(self.nodes.len() as u32);
        self.nodes.push(Node { off, rows, cols, op });
        (id, off)
    }

    fn unary(&mut self, x: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let n = self.node(x);
        let (v, off) = self.push(n.rows, n.cols, op);
        for i in 0..n.len() {
            self.vals[off + i] = f(self.vals[n.off + i]);
        }
        v
    }

    fn binary(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let (na, nb) = (self.node(a), self.node(b));
        assert_eq!(na.len(), nb.len(), "elementwise op on mismatched sizes");
        let (v, off) = self.push(na.rows, na.cols, op);
        for i in 0..na.len() {
            self.vals[off + i] = f(self.vals[na.off + i], self.vals[nb.off + i]);
        }
        v
    }

    pub fn constant(&mut self, rows: usize, cols: usize, data: &[f64]) -> Var {
        assert_eq!(rows * cols, data.len());
        let (v, off) = self.push(rows, cols, Op::Const);
        self.vals[off..off + data.len()].copy_from_slice(data);
        v
    }

    pub fn vector(&mut self, data: &[f64]) -> Var {
        self.constant(1, data.len(), data)
    }

    pub fn zeros(&mut self, rows: usize, cols: usize) -> Var {
        self.push(rows, cols, Op::Const).0
    }

    /// Whole parameter as a value; `[rows, cols]` follows its shape.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        let t = store.get(id);
        let (v, off) = self.push(t.rows(), t.cols(), Op::Param(id));
        self.vals[off..off + t.len()].copy_from_slice(&t.data);
        v
    }

    /// Rows of an embedding table, one per id: `[ids.len(), d]`.
    pub fn embed(&mut self, store: &ParamStore, table: ParamId, ids: &[usize]) -> Result<Var, NnError> {
        let t = store.get(table);
        let (n, d) = (t.rows(), t.cols());
        if let Some(&bad) = ids.iter().find(|&&i| i >= n) {
            return Err(NnError::IdOutOfRange {
                table: store.name(table).to_string(),
                id: bad,
                rows: n,
            });
        }
        let start = self.ints.len();
        self.ints.extend_from_slice(ids);
        let (v, off) = self.push(ids.len(), d, Op::Gather { table, ids: (start, ids.len()) });
        for (r, &id) in ids.iter().enumerate() {
            self.vals[off + r * d..off + (r + 1) * d].copy_from_slice(&t.data[id * d..(id + 1) * d]);
        }
        Ok(v)
    }

    /// Mean over non-empty groups of the mean embedding of each group.
    /// All-empty input yields a zero vector.
    pub fn embed_bag<S: AsRef<[usize]>>(
        &mut self,
        store: &ParamStore,
        table: ParamId,
        groups: &[S],
    ) -> Result<Var, NnError> {
        let t = store.get(table);
        let (n, d) = (t.rows(), t.cols());
        let start = self.ints.len();
        let mut count = 0;
        for g in groups {
            let g = g.as_ref();
            if g.is_empty() {
                continue;
            }
            if let Some(&bad) = g.iter().find(|&&i| i >= n) {
                self.ints.truncate(start);
                return Err(NnError::IdOutOfRange {
                    table: store.name(table).to_string(),
                    id: bad,
                    rows: n,
                });
            }
            self.ints.push(g.len());
            self.ints.extend_from_slice(g);
            count += 1;
        }
        let spec = (start, count);
        let (v, off) = self.push(1, d, Op::Bag { table, spec });
        let mut p = start;
        for _ in 0..count {
            let len = self.ints[p];
            let w = 1.0 / (count as f64 * len as f64);
            for k in 0..len {
                let id = self.ints[p + 1 + k];
                let row = &t.data[id * d..(id + 1) * d];
                for j in 0..d {
                    self.vals[off + j] += w * row[j];
                }
            }
            p += 1 + len;
        }
        Ok(v)
    }

    /// Row-wise `x · Wᵀ + b` with `W` shaped `[out, in]`.
    pub fn affine(&mut self, store: &ParamStore, w: ParamId, b: Option<ParamId>, x: Var) -> Var {
        let wt = store.get(w);
        let (out, inp) = (wt.rows(), wt.cols());
        let nx = self.node(x);
        assert_eq!(nx.cols, inp, "affine input width");
        let (v, off) = self.push(nx.rows, out, Op::Affine { w, b, x });
        for r in 0..nx.rows {
            let xr = nx.off + r * inp;
            for o in 0..out {
                let wr = &wt.data[o * inp..(o + 1) * inp];
                let mut s = b.map_or(0.0, |b| store.get(b).data[o]);
                for i in 0..inp {
                    s += wr[i] * self.vals[xr + i];
                }
                self.vals[off + r * out + o] = s;
            }
        }
        v
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        self.unary(x, Op::Scale(x, s), |v| v * s)
    }

    pub fn add_const(&mut self, x: Var, c: f64) -> Var {
        self.unary(x, Op::AddConst(x), |v| v + c)
    }

    /// `1 - x`.
    pub fn one_minus(&mut self, x: Var) -> Var {
        let n = self.scale(x, -1.0);
        self.add_const(n, 1.0)
    }

    /// `x * s` where `s` is a one-element value.
    pub fn mul_scalar(&mut self, x: Var, s: Var) -> Var {
        assert_eq!(self.size(s), 1, "mul_scalar needs a scalar");
        let sv = self.scalar(s);
        self.unary(x, Op::MulScalar(x, s), |v| v * sv)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, Op::Sigmoid(x), sigmoid)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, Op::Tanh(x), f64::tanh)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, Op::Relu(x), |v| v.max(0.0))
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.unary(x, Op::Square(x), |v| v * v)
    }

    /// Concatenates one-row values along columns.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let total: usize = parts.iter().map(|&p| self.size(p)).sum();
        let start = self.vars.len();
        self.vars.extend_from_slice(parts);
        let (v, mut off) = self.push(1, total, Op::Concat(start, parts.len()));
        for &p in parts {
            let n = self.node(p);
            self.vals.copy_within(n.off..n.off + n.len(), off);
            off += n.len();
        }
        v
    }

    /// Stacks equal-width values as rows.
    pub fn stack(&mut self, rows: &[Var]) -> Var {
        assert!(!rows.is_empty(), "stack of nothing");
        let cols = self.size(rows[0]);
        let mut total = 0;
        for &r in rows {
            assert_eq!(self.size(r), cols, "stack rows differ in width");
            total += 1;
        }
        let start = self.vars.len();
        self.vars.extend_from_slice(rows);
        let (v, mut off) = self.push(total, cols, Op::Stack(start, rows.len()));
        for &r in rows {
            let n = self.node(r);
            self.vals.copy_within(n.off..n.off + n.len(), off);
            off += n.len();
        }
        v
    }

    /// Flat slice `[start, start+len)` as a one-row value.
    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Var {
        let n = self.node(x);
        assert!(start + len <= n.len(), "slice out of range");
        let (v, off) = self.push(1, len, Op::Slice(x, start));
        self.vals.copy_within(n.off + start..n.off + start + len, off);
        v
    }

    pub fn row(&mut self, x: Var, i: usize) -> Var {
        let c = self.node(x).cols;
        self.slice(x, i * c, c)
    }

    pub fn pick(&mut self, x: Var, i: usize) -> Var {
        self.slice(x, i, 1)
    }

    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Var {
        let n = self.node(x);
        assert_eq!(n.len(), rows * cols, "reshape size");
        let (v, off) = self.push(rows, cols, Op::Reshape(x));
        self.vals.copy_within(n.off..n.off + n.len(), off);
        v
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let (na, nb) = (self.node(a), self.node(b));
        assert_eq!(na.len(), nb.len(), "dot sizes");
        let mut s = 0.0;
        for i in 0..na.len() {
            s += self.vals[na.off + i] * self.vals[nb.off + i];
        }
        let (v, off) = self.push(1, 1, Op::Dot(a, b));
        self.vals[off] = s;
        v
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let n = self.node(x);
        let s: f64 = self.vals[n.off..n.off + n.len()].iter().sum();
        let (v, off) = self.push(1, 1, Op::Sum(x));
        self.vals[off] = s;
        v
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let n = self.node(x);
        assert!(n.len() > 0, "mean of nothing");
        let s: f64 = self.vals[n.off..n.off + n.len()].iter().sum();
        let (v, off) = self.push(1, 1, Op::Mean(x));
        self.vals[off] = s / n.len() as f64;
        v
    }

    /// Softmax over all entries.
    pub fn softmax(&mut self, x: Var) -> Var {
        let n = self.node(x);
        let (v, off) = self.push(n.rows, n.cols, Op::Softmax(x));
        let src = n.off..n.off + n.len();
        let m = self.vals[src.clone()].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for i in 0..n.len() {
            let e = (self.vals[n.off + i] - m).exp();
            self.vals[off + i] = e;
            z += e;
        }
        for i in 0..n.len() {
            self.vals[off + i] /= z;
        }
        v
    }

    /// `A · Bᵀ` for `A [m,k]`, `B [n,k]`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let (na, nb) = (self.node(a), self.node(b));
        assert_eq!(na.cols, nb.cols, "matmul_t inner dims");
        let k = na.cols;
        let (v, off) = self.push(na.rows, nb.rows, Op::MatMulT(a, b));
        for i in 0..na.rows {
            for j in 0..nb.rows {
                let mut s = 0.0;
                for t in 0..k {
                    s += self.vals[na.off + i * k + t] * self.vals[nb.off + j * k + t];
                }
                self.vals[off + i * nb.rows + j] = s;
            }
        }
        v
    }

    /// `p · X` for a weight vector `p` with one entry per row of `X`.
    pub fn vecmat(&mut self, p: Var, x: Var) -> Var {
        let (np, nx) = (self.node(p), self.node(x));
        assert_eq!(np.len(), nx.rows, "vecmat dims");
        let k = nx.cols;
        let (v, off) = self.push(1, k, Op::VecMat(p, x));
        for m in 0..nx.rows {
            let w = self.vals[np.off + m];
            for j in 0..k {
                self.vals[off + j] += w * self.vals[nx.off + m * k + j];
            }
        }
        v
    }

    /// Sums each run of `g` consecutive rows: `[n*g, k] -> [n, k]`.
    pub fn sum_row_groups(&mut self, x: Var, g: usize) -> Var {
        let nx = self.node(x);
        assert!(g > 0 && nx.rows % g == 0, "sum_row_groups divisibility");
        let (n, k) = (nx.rows / g, nx.cols);
        let (v, off) = self.push(n, k, Op::SumGroups(x, g));
        for r in 0..nx.rows {
            let dst = off + (r / g) * k;
            for j in 0..k {
                self.vals[dst + j] += self.vals[nx.off + r * k + j];
            }
        }
        v
    }

    /// LSTM cell on pre-activations `z = [i, f, g, o]` (each `H` wide) and
    /// previous cell `c`; returns `[h, c']`.
    pub fn lstm_cell(&mut self, z: Var, c: Var) -> Var {
        let (nz, nc) = (self.node(z), self.node(c));
        let h = nc.len();
        assert_eq!(nz.len(), 4 * h, "lstm_cell gate width");
        let (v, off) = self.push(1, 2 * h, Op::LstmCell { z, c });
        for j in 0..h {
            let i = sigmoid(self.vals[nz.off + j]);
            let f = sigmoid(self.vals[nz.off + h + j]);
            let g = self.vals[nz.off + 2 * h + j].tanh();
            let o = sigmoid(self.vals[nz.off + 3 * h + j]);
            let cn = f * self.vals[nc.off + j] + i * g;
            self.vals[off + j] = o * cn.tanh();
            self.vals[off + h + j] = cn;
        }
        v
    }

    /// Backpropagates `seed` from `out` (usually a scalar) and accumulates
    /// parameter gradients into `grads`.
    pub fn backward(&mut self, out: Var, store: &ParamStore, grads: &mut Grads) {
        let top = out.0 as usize;
        self.grad.clear();
        self.grad.resize(self.vals.len(), 0.0);
        self.touched.clear();
        self.touched.resize(self.nodes.len(), false);
        let no = self.node(out);
        for g in &mut self.grad[no.off..no.off + no.len()] {
            *g = 1.0;
        }
        self.touched[top] = true;
        let mut go = std::mem::take(&mut self.scratch);
        for idx in (0..=top).rev() {
            if !self.touched[idx] {
                continue;
            }
            let node = self.nodes[idx];
            go.clear();
            go.extend_from_slice(&self.grad[node.off..node.off + node.len()]);
            self.back_node(node, &go, store, grads);
        }
        self.scratch = go;
    }

    fn touch(&mut self, v: Var) -> Node {
        self.touched[v.0 as usize] = true;
        self.node(v)
    }

    fn back_node(&mut self, node: Node, go: &[f64], store: &ParamStore, grads: &mut Grads) {
        let off = node.off;
        match node.op {
            Op::Const => {}
            Op::Param(id) => {
                for (a, g) in grads.bufs[id.0].iter_mut().zip(go) {
                    *a += g;
                }
            }
            Op::Gather { table, ids } => {
                let d = node.cols;
                let buf = &mut grads.bufs[table.0];
                for r in 0..ids.1 {
                    let id = self.ints[ids.0 + r];
                    for j in 0..d {
                        buf[id * d + j] += go[r * d + j];
                    }
                }
            }
            Op::Bag { table, spec } => {
                let d = node.cols;
                let buf = &mut grads.bufs[table.0];
                let mut p = spec.0;
                for _ in 0..spec.1 {
                    let len = self.ints[p];
                    let w = 1.0 / (spec.1 as f64 * len as f64);
                    for k in 0..len {
                        let id = self.ints[p + 1 + k];
                        for j in 0..d {
                            buf[id * d + j] += w * go[j];
                        }
                    }
                    p += 1 + len;
                }
            }
            Op::Affine { w, b, x } => {
                let nx = self.touch(x);
                let wt = store.get(w);
                let (out, inp) = (wt.rows(), wt.cols());
                {
                    let gw = &mut grads.bufs[w.0];
                    for r in 0..nx.rows {
                        for o in 0..out {
                            let g = go[r * out + o];
                            if g == 0.0 {
                                continue;
                            }
                            let xr = nx.off + r * inp;
                            let row = &mut gw[o * inp..(o + 1) * inp];
                            for i in 0..inp {
                                row[i] += g * self.vals[xr + i];
                            }
                        }
                    }
                }
                if let Some(b) = b {
                    let gb = &mut grads.bufs[b.0];
                    for r in 0..nx.rows {
                        for o in 0..out {
                            gb[o] += go[r * out + o];
                        }
                    }
                }
                for r in 0..nx.rows {
                    for o in 0..out {
                        let g = go[r * out + o];
                        if g == 0.0 {
                            continue;
                        }
                        let wr = &wt.data[o * inp..(o + 1) * inp];
                        let xr = nx.off + r * inp;
                        for i in 0..inp {
                            self.grad[xr + i] += g * wr[i];
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                let (na, nb) = (self.touch(a), self.touch(b));
                for i in 0..go.len() {
                    self.grad[na.off + i] += go[i];
                    self.grad[nb.off + i] += go[i];
                }
            }
            Op::Sub(a, b) => {
                let (na, nb) = (self.touch(a), self.touch(b));
                for i in 0..go.len() {
                    self.grad[na.off + i] += go[i];
                    self.grad[nb.off + i] -= go[i];
                }
            }
            Op::Mul(a, b) => {
                let (na, nb) = (self.touch(a), self.touch(b));
                for i in 0..go.len() {
                    let (av, bv) = (self.vals[na.off + i], self.vals[nb.off + i]);
                    self.grad[na.off + i] += go[i] * bv;
                    self.grad[nb.off + i] += go[i] * av;
                }
            }
            Op::Scale(x, s) => {
                let nx = self.touch(x);
                for i in 0..go.len() {
                    self.grad[nx.off + i] += go[i] * s;
                }
            }
            Op::AddConst(x) => {
                let nx = self.touch(x);
                for i in 0..go.len() {
                    self.grad[nx.off + i] += go[i];
                }
            }
            Op::MulScalar(x, s) => {
                let (nx, ns) = (self.touch(x), self.touch(s));
                let sv = self.vals[ns.off];
                let mut gs = 0.0;
                for i in 0..go.len() {
                    gs += go[i] * self.vals[nx.off + i];
                    self.grad[nx.off + i] += go[i] * sv;
                }
                self.grad[ns.off] += gs;
            }
            Op::Sigmoid(x) => {
                let nx = self.touch(x);
                for i in 0..go.len() {
                    let y = self.vals[off + i];
                    self.grad[nx.off + i] += go[i] * y * (1.0 - y);
                }
            }
            Op::Tanh(x) => {
                let nx = self.touch(x);
                for i in 0..go.len() {
                    let y = self.vals[off + i];
                    self.grad[nx.off + i] += go[i] * (1.0 - y * y);
                }
            }
            Op::Relu(x) => {
                let nx = self.touch(x);
                for i in 0..go.len() {
                    if self.vals[nx.off + i] > 0.0 {
                        self.grad[nx.off + i] += go[i];
                    }
                }
            }
            Op::Square(x) => {
                let nx = self.touch(x);
                for i in 0..go.len() {
                    self.grad[nx.off + i] += 2.0 * go[i] * self.vals[nx.off + i];
                }
            }
            Op::Concat(start, count) | Op::Stack(start, count) => {
                let mut pos = 0;
                for k in 0..count {
                    let p = self.vars[start + k];
                    let np = self.touch(p);
                    for i in 0..np.len() {
                        self.grad[np.off + i] += go[pos + i];
                    }
                    pos += np.len();
                }
            }
            Op::Slice(x, start) => {
                let nx = self.touch(x);
                for i in 0..go.len() {
                    self.grad[nx.off + start + i] += go[i];
                }
            }
            Op::Reshape(x) => {
                let nx = self.touch(x);
                for i in 0..go.len() {
                    self.grad[nx.off + i] += go[i];
                }
            }
            Op::Dot(a, b) => {
                let (na, nb) = (self.touch(a), self.touch(b));
                let g = go[0];
                for i in 0..na.len() {
                    let (av, bv) = (self.vals[na.off + i], self.vals[nb.off + i]);
                    self.grad[na.off + i] += g * bv;
                    self.grad[nb.off + i] += g * av;
                }
            }
            Op::Sum(x) => {
                let nx = self.touch(x);
                for i in 0..nx.len() {
                    self.grad[nx.off + i] += go[0];
                }
            }
            Op::Mean(x) => {
                let nx = self.touch(x);
                let g = go[0] / nx.len() as f64;
                for i in 0..nx.len() {
                    self.grad[nx.off + i] += g;
                }
            }
            Op::Softmax(x) => {
                let nx = self.touch(x);
                let mut gy = 0.0;
                for i in 0..go.len() {
                    gy += go[i] * self.vals[off + i];
                }
                for i in 0..go.len() {
                    let y = self.vals[off + i];
                    self.grad[nx.off + i] += y * (go[i] - gy);
                }
            }
            Op::MatMulT(a, b) => {
                let (na, nb) = (self.touch(a), self.touch(b));
                let k = na.cols;
                for i in 0..na.rows {
                    for j in 0..nb.rows {
                        let g = go[i * nb.rows + j];
                        if g == 0.0 {
                            continue;
                        }
                        for t in 0..k {
                            let (av, bv) = (self.vals[na.off + i * k + t], self.vals[nb.off + j * k + t]);
                            self.grad[na.off + i * k + t] += g * bv;
                            self.grad[nb.off + j * k + t] += g * av;
                        }
                    }
                }
            }
            Op::VecMat(p, x) => {
                let (np, nx) = (self.touch(p), self.touch(x));
                let k = nx.cols;
                for m in 0..nx.rows {
                    let w = self.vals[np.off + m];
                    let mut gp = 0.0;
                    for j in 0..k {
                        gp += go[j] * self.vals[nx.off + m * k + j];
                        self.grad[nx.off + m * k + j] += w * go[j];
                    }
                    self.grad[np.off + m] += gp;
                }
            }
            Op::SumGroups(x, g) => {
                let nx = self.touch(x);
                let k = nx.cols;
                for r in 0..nx.rows {
                    for j in 0..k {
                        self.grad[nx.off + r * k + j] += go[(r / g) * k + j];
                    }
                }
            }
            Op::LstmCell { z, c } => {
                let (nz, nc) = (self.touch(z), self.touch(c));
                let h = nc.len();
                for j in 0..h {
                    let i = sigmoid(self.vals[nz.off + j]);
                    let f = sigmoid(self.vals[nz.off + h + j]);
                    let g = self.vals[nz.off + 2 * h + j].tanh();
                    let o = sigmoid(self.vals[nz.off + 3 * h + j]);
                    let cp = self.vals[nc.off + j];
                    let cn = self.vals[off + h + j];
                    let tc = cn.tanh();
                    let gh = go[j];
                    let gc = go[h + j] + gh * o * (1.0 - tc * tc);
                    self.grad[nz.off + j] += gc * g * i * (1.0 - i);
                    self.grad[nz.off + h + j] += gc * cp * f * (1.0 - f);
                    self.grad[nz.off + 2 * h + j] += gc * i * (1.0 - g * g);
                    self.grad[nz.off + 3 * h + j] += gh * tc * o * (1.0 - o);
                    self.grad[nc.off + j] += gc * f;
                }
            }
        }
    }
}
