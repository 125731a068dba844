//! Runs an untrained QWeb network on a book-flight page and prints the three
//! Q heads, the instruction attention and the selected composite action.

use anyhow::Result;
use qweblab::env::{EpisodeConfig, WebEnv};
use qweblab::nn::{ParamStore, Tape};
use qweblab::qweb::{QWebConfig, QWebNet, SelectMode, Vocab};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut env = WebEnv::new("book-flight-form", EpisodeConfig::default().with_seed(3))?;
    let task = env.sample_task();
    let mut store = ParamStore::new(1);
    let cfg = QWebConfig { embed_dim: 16, lstm_hidden: 16, field_dim: 16, shallow: true, ..QWebConfig::default() };
    let net = QWebNet::new(cfg, Vocab::from_texts(env.vocabulary()), &mut store)?;
    println!("{} parameters in {} tensors", store.num_values(), store.len());

    let state = net.encode(&task.instruction, &task.initial);
    let q = net.q_values(&store, &state)?;
    let leaves = task.initial.leaf_elements();
    for (l, id) in leaves.iter().enumerate() {
        let el = task.initial.get(*id).expect("leaf");
        println!(
            "{:>3} {:<8} q_dom {:+.3} click {:+.3} type {:+.3} fields {:?}",
            id,
            el.tag(),
            q.q_dom[l],
            q.q_click_type[l][0],
            q.q_click_type[l][1],
            q.q_type[l].iter().map(|v| format!("{v:+.3}")).collect::<Vec<_>>()
        );
    }

    let mut tape = Tape::new();
    let fields = net.encode_instruction(&mut tape, &store, &state)?;
    let (attention, _) = net.encode_intersection(&mut tape, &store, &state, &fields)?;
    println!("attention over fields {:?}", tape.value(attention));

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let greedy = q.select(SelectMode::Greedy, 1.0, &mut rng);
    println!("greedy {:?} -> {:?}", greedy, greedy.to_action(&leaves));
    println!("max composite {:+.3}", q.max_composite());
    Ok(())
}
