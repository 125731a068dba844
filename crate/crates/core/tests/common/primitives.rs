//! One small random graph per tape primitive, for gradient checking.

use qweblab::nn::{BiLstm, ParamStore, Tape, Tensor, Var};
use rand::Rng;

use super::gradcheck::{away_from_zero, random_store};

pub type Build = Box<dyn Fn(&mut Tape, &ParamStore) -> Var>;

pub struct Case {
    pub name: &'static str,
    pub store: ParamStore,
    pub build: Build,
}

fn tensor(shape: Vec<usize>, data: Vec<f64>) -> Tensor {
    Tensor::new(shape, data).unwrap()
}

/// All primitive cases with dimensions `a, b, c` in `1..=8`.
pub fn cases(seed: u64, a: usize, b: usize, c: usize) -> Vec<Case> {
    let mut out = Vec::new();
    let mut case = |name: &'static str, make: &dyn Fn(&mut ParamStore, &mut rand_chacha::ChaCha8Rng) -> Build| {
        let (mut store, mut rng) = random_store(seed.wrapping_add(out_len_hash(name)));
        let build = make(&mut store, &mut rng);
        out.push(Case { name, store, build });
    };

    case("param", &|s, r| {
        let p = s.add("p", tensor(vec![a, b], away_from_zero(r, a * b))).unwrap();
        Box::new(move |t, s| t.param(s, p))
    });
    case("embed", &|s, r| {
        let n = a + 1;
        let e = s.uniform("emb", vec![n, b], 1.0).unwrap();
        let mut ids: Vec<usize> = (0..c).map(|_| r.gen_range(0..n)).collect();
        ids.push(ids[0]);
        Box::new(move |t, s| t.embed(s, e, &ids).unwrap())
    });
    case("embed_bag", &|s, r| {
        let n = a + 1;
        let e = s.uniform("emb", vec![n, b], 1.0).unwrap();
        let groups: Vec<Vec<usize>> = (0..c + 1)
            .map(|g| {
                if g == 1 {
                    vec![]
                } else {
                    (0..r.gen_range(1..4)).map(|_| r.gen_range(0..n)).collect()
                }
            })
            .collect();
        Box::new(move |t, s| t.embed_bag(s, e, &groups).unwrap())
    });
    case("affine", &|s, r| {
        let w = s.uniform("w", vec![b, c], 1.0).unwrap();
        let bias = s.uniform("b", vec![b], 1.0).unwrap();
        let x = s.add("x", tensor(vec![a, c], away_from_zero(r, a * c))).unwrap();
        Box::new(move |t, s| {
            let xv = t.param(s, x);
            t.affine(s, w, Some(bias), xv)
        })
    });
    let pair = |s: &mut ParamStore, r: &mut rand_chacha::ChaCha8Rng| {
        let x = s.add("x", tensor(vec![a, b], away_from_zero(r, a * b))).unwrap();
        let y = s.add("y", tensor(vec![a, b], away_from_zero(r, a * b))).unwrap();
        (x, y)
    };
    case("add", &|s, r| {
        let (x, y) = pair(s, r);
        Box::new(move |t, s| {
            let (u, v) = (t.param(s, x), t.param(s, y));
            t.add(u, v)
        })
    });
    case("sub", &|s, r| {
        let (x, y) = pair(s, r);
        Box::new(move |t, s| {
            let (u, v) = (t.param(s, x), t.param(s, y));
            t.sub(u, v)
        })
    });
    case("mul", &|s, r| {
        let (x, y) = pair(s, r);
        Box::new(move |t, s| {
            let (u, v) = (t.param(s, x), t.param(s, y));
            let w = t.mul(u, v);
            t.mul(w, u)
        })
    });
    case("scale_one_minus", &|s, r| {
        let (x, _) = pair(s, r);
        Box::new(move |t, s| {
            let u = t.param(s, x);
            let v = t.scale(u, -2.5);
            t.one_minus(v)
        })
    });
    case("mul_scalar", &|s, r| {
        let (x, _) = pair(s, r);
        let k = s.add("k", tensor(vec![1], vec![0.7])).unwrap();
        Box::new(move |t, s| {
            let (u, kv) = (t.param(s, x), t.param(s, k));
            t.mul_scalar(u, kv)
        })
    });
    for (name, which) in [("sigmoid", 0), ("tanh", 1), ("relu", 2), ("square", 3)] {
        case(name, &|s, r| {
            let (x, _) = pair(s, r);
            Box::new(move |t, s| {
                let u = t.param(s, x);
                match which {
                    0 => t.sigmoid(u),
                    1 => t.tanh(u),
                    2 => t.relu(u),
                    _ => t.square(u),
                }
            })
        });
    }
    case("concat", &|s, r| {
        let p = s.add("p", tensor(vec![a], away_from_zero(r, a))).unwrap();
        let q = s.add("q", tensor(vec![b], away_from_zero(r, b))).unwrap();
        Box::new(move |t, s| {
            let (u, v) = (t.param(s, p), t.param(s, q));
            t.concat(&[u, v, u])
        })
    });
    case("stack_row_slice", &|s, r| {
        let (x, y) = pair(s, r);
        Box::new(move |t, s| {
            let (u, v) = (t.param(s, x), t.param(s, y));
            let r0 = t.row(u, a - 1);
            let r1 = t.row(v, 0);
            let st = t.stack(&[r0, r1, r0]);
            let sl = t.slice(st, 1, b);
            let pk = t.pick(st, 0);
            let mixed = t.mul_scalar(sl, pk);
            t.concat(&[mixed, r1])
        })
    });
    case("reshape", &|s, r| {
        let (x, _) = pair(s, r);
        Box::new(move |t, s| {
            let u = t.param(s, x);
            let v = t.reshape(u, b, a);
            let w = t.row(v, 0);
            t.square(w)
        })
    });
    case("dot_sum_mean", &|s, r| {
        let (x, y) = pair(s, r);
        Box::new(move |t, s| {
            let (u, v) = (t.param(s, x), t.param(s, y));
            let d = t.dot(u, v);
            let su = t.sum(u);
            let m = t.mean(v);
            let w = t.concat(&[d, su, m]);
            t.square(w)
        })
    });
    case("softmax", &|s, r| {
        let (x, _) = pair(s, r);
        Box::new(move |t, s| {
            let u = t.param(s, x);
            t.softmax(u)
        })
    });
    case("matmul_t", &|s, r| {
        let x = s.add("x", tensor(vec![a, c], away_from_zero(r, a * c))).unwrap();
        let y = s.add("y", tensor(vec![b, c], away_from_zero(r, b * c))).unwrap();
        Box::new(move |t, s| {
            let (u, v) = (t.param(s, x), t.param(s, y));
            t.matmul_t(u, v)
        })
    });
    case("vecmat", &|s, r| {
        let p = s.add("p", tensor(vec![a], away_from_zero(r, a))).unwrap();
        let x = s.add("x", tensor(vec![a, b], away_from_zero(r, a * b))).unwrap();
        Box::new(move |t, s| {
            let (u, v) = (t.param(s, p), t.param(s, x));
            t.vecmat(u, v)
        })
    });
    case("sum_row_groups", &|s, r| {
        let x = s.add("x", tensor(vec![a * c, b], away_from_zero(r, a * b * c))).unwrap();
        Box::new(move |t, s| {
            let u = t.param(s, x);
            t.sum_row_groups(u, c)
        })
    });
    case("lstm_cell", &|s, r| {
        let z = s.add("z", tensor(vec![4 * b], away_from_zero(r, 4 * b))).unwrap();
        let cp = s.add("c", tensor(vec![b], away_from_zero(r, b))).unwrap();
        Box::new(move |t, s| {
            let (zv, cv) = (t.param(s, z), t.param(s, cp));
            t.lstm_cell(zv, cv)
        })
    });
    case("bilstm", &|s, r| {
        let net = BiLstm::new(s, "lstm", c, b).unwrap();
        let x = s.add("x", tensor(vec![5, c], away_from_zero(r, 5 * c))).unwrap();
        Box::new(move |t, s| {
            let xv = t.param(s, x);
            net.forward(t, s, xv).unwrap()
        })
    });
    out
}

fn out_len_hash(name: &str) -> u64 {
    name.bytes().fold(1469598103934665603u64, |h, b| (h ^ b as u64).wrapping_mul(1099511628211))
}
