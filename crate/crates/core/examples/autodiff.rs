//! Builds a small graph on the tape, backpropagates, and compares the
//! gradient of one parameter against central differences.

use anyhow::Result;
use qweblab::nn::{bilstm, BiLstm, ParamStore, Tape, Var};

fn loss(tape: &mut Tape, store: &ParamStore, lstm: &BiLstm, xs: &[Vec<f64>]) -> Result<Var> {
    let inputs: Vec<_> = xs.iter().map(|x| tape.vector(x)).collect();
    let outs = bilstm(tape, store, lstm, &inputs)?;
    let all = tape.concat(&outs);
    let sq = tape.square(all);
    Ok(tape.mean(sq))
}

fn main() -> Result<()> {
    let mut store = ParamStore::new(7);
    let lstm = BiLstm::new(&mut store, "demo", 3, 4)?;
    let xs = vec![vec![0.5, -1.0, 0.2], vec![0.1, 0.3, -0.7], vec![-0.4, 0.9, 0.0]];

    let mut tape = Tape::new();
    let l = loss(&mut tape, &store, &lstm, &xs)?;
    let mut grads = store.zero_grads();
    tape.backward(l, &store, &mut grads);
    println!("loss {:.6}, tape nodes {}", tape.scalar(l), tape.len());

    let id = store.id("demo.fwd.w_ih").expect("registered");
    let h = 1e-5;
    for k in 0..4 {
        let orig = store.get(id).data[k];
        store.get_mut(id).data[k] = orig + h;
        let mut t = Tape::new();
        let lp = loss(&mut t, &store, &lstm, &xs)?;
        let lp = t.scalar(lp);
        store.get_mut(id).data[k] = orig - h;
        let mut t = Tape::new();
        let lm = loss(&mut t, &store, &lstm, &xs)?;
        let lm = t.scalar(lm);
        store.get_mut(id).data[k] = orig;
        println!("w_ih[{k}]: analytic {:+.8} numeric {:+.8}", grads.get(id)[k], (lp - lm) / (2.0 * h));
    }
    Ok(())
}
