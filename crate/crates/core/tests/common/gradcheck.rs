//! Central finite-difference oracle for tape gradients.

use qweblab::nn::{Grads, ParamId, ParamStore, Tape, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Report {
    pub worst_rel: f64,
    pub entries: usize,
}

/// Loss is `Σ c_i out_i` for fixed random weights `c`.
fn loss_of(
    build: &dyn Fn(&mut Tape, &ParamStore) -> Var,
    store: &ParamStore,
    weights: &mut Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> (f64, Tape, Var) {
    let mut tape = Tape::new();
    let out = build(&mut tape, store);
    let n = tape.size(out);
    while weights.len() < n {
        weights.push(rng.gen_range(-1.0..1.0));
    }
    let c = tape.vector(&weights[..n]);
    let flat = tape.reshape(out, 1, n);
    let l = tape.dot(flat, c);
    (tape.scalar(l), tape, l)
}

/// Compares analytic parameter gradients against central differences with step `h`.
/// Relative error per parameter is `‖a − n‖ / max(‖a‖ + ‖n‖, 1e-8)`.
pub fn check(build: &dyn Fn(&mut Tape, &ParamStore) -> Var, store: &mut ParamStore, h: f64, seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::new();
    let (_, mut tape, l) = loss_of(build, store, &mut weights, &mut rng);
    let mut grads: Grads = store.zero_grads();
    tape.backward(l, store, &mut grads);
    let mut worst: f64 = 0.0;
    let mut entries = 0;
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        let mut diff2 = 0.0;
        let mut a2 = 0.0;
        let mut n2 = 0.0;
        for k in 0..store.get(id).len() {
            let orig = store.get(id).data[k];
            store.get_mut(id).data[k] = orig + h;
            let (lp, _, _) = loss_of(build, store, &mut weights, &mut rng);
            store.get_mut(id).data[k] = orig - h;
            let (lm, _, _) = loss_of(build, store, &mut weights, &mut rng);
            store.get_mut(id).data[k] = orig;
            let num = (lp - lm) / (2.0 * h);
            let ana = grads.get(id)[k];
            diff2 += (ana - num) * (ana - num);
            a2 += ana * ana;
            n2 += num * num;
            entries += 1;
        }
        let rel = diff2.sqrt() / (a2.sqrt() + n2.sqrt()).max(1e-8);
        worst = worst.max(rel);
    }
    Report { worst_rel: worst, entries }
}

pub fn random_store(seed: u64) -> (ParamStore, ChaCha8Rng) {
    (ParamStore::new(seed), ChaCha8Rng::seed_from_u64(seed ^ 0x9e37))
}

/// Values bounded away from zero, for kinked ops.
pub fn away_from_zero(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let v: f64 = rng.gen_range(0.05..1.0);
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect()
}
