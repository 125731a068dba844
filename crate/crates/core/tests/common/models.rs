//! Small networks and instances, and finite-difference checks of the two
//! training losses.

use std::sync::Arc;

use qweblab::dom::{Attr, DomElement, DomTree, Instruction};
use qweblab::dqn::{td_loss_and_grad, Transition};
use qweblab::env::{CompositeAction, Verb};
use qweblab::meta::{inet_loss_and_grad, Inet, InetConfig, InetTransition};
use qweblab::nn::{Grads, ParamId, ParamStore, Tape};
use qweblab::qweb::{LeafAction, QWebConfig, QWebNet, Vocab};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Root plus two leaves, against a two-field instruction.
pub fn two_leaf_instance() -> (Instruction, DomTree) {
    let tree = DomTree::new(
        0,
        vec![
            DomElement::node(0, "form", vec![1, 2]),
            DomElement::leaf(1, "input").with_attr(Attr::Name, "from").with_attr(Attr::Value, "san francisco"),
            DomElement::leaf(2, "button").with_attr(Attr::Text, "to new york"),
        ],
    )
    .unwrap();
    let ins = Instruction::from_pairs([("from", "san francisco"), ("to", "new york")]).unwrap();
    (ins, tree)
}

pub fn vocab_of(ins: &Instruction, tree: &DomTree) -> Vocab {
    let mut texts: Vec<String> = ins.fields.iter().flat_map(|f| [f.key.clone(), f.value.clone()]).collect();
    for el in tree.elements() {
        texts.extend(el.attrs.iter().map(|(_, v)| v.to_string()));
    }
    Vocab::from_texts(texts)
}

/// Adds small random noise to every parameter so no value sits at its
/// initial constant.
pub fn jitter(store: &mut ParamStore, seed: u64, scale: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        for v in &mut store.get_mut(id).data {
            *v += rng.gen_range(-scale..scale);
        }
    }
}

pub fn tiny_qweb(vocab: Vocab, width: usize, shallow: bool, seed: u64) -> (QWebNet, ParamStore) {
    let mut store = ParamStore::new(seed);
    let cfg = QWebConfig { embed_dim: width, lstm_hidden: width, field_dim: width, head_hidden: 0, shallow };
    let net = QWebNet::new(cfg, vocab, &mut store).unwrap();
    jitter(&mut store, seed ^ 7, 0.3);
    (net, store)
}

pub fn tiny_inet(vocab: Vocab, width: usize, seed: u64) -> (Inet, ParamStore) {
    let mut store = ParamStore::new(seed);
    let net = Inet::new(InetConfig { embed_dim: width, hidden: width }, vocab, &mut store).unwrap();
    jitter(&mut store, seed ^ 7, 0.3);
    (net, store)
}

/// Worst per-parameter relative error between the analytic gradient filled in
/// by `f` and central differences of its returned loss.
pub fn loss_gradcheck(store: &mut ParamStore, h: f64, f: &dyn Fn(&ParamStore, &mut Grads) -> f64) -> f64 {
    let mut grads = store.zero_grads();
    f(store, &mut grads);
    let mut scratch = store.zero_grads();
    let mut worst: f64 = 0.0;
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        let (mut d2, mut a2, mut n2) = (0.0, 0.0, 0.0);
        for k in 0..store.get(id).len() {
            let orig = store.get(id).data[k];
            store.get_mut(id).data[k] = orig + h;
            let lp = f(store, &mut scratch);
            store.get_mut(id).data[k] = orig - h;
            let lm = f(store, &mut scratch);
            store.get_mut(id).data[k] = orig;
            let num = (lp - lm) / (2.0 * h);
            let ana = grads.get(id)[k];
            d2 += (ana - num) * (ana - num);
            a2 += ana * ana;
            n2 += num * num;
        }
        worst = worst.max(d2.sqrt() / (a2.sqrt() + n2.sqrt()).max(1e-8));
    }
    worst
}

/// The TD loss on a click and a type transition of the two-leaf instance.
pub fn qweb_loss_gradcheck(seed: u64, shallow: bool) -> f64 {
    let (ins, tree) = two_leaf_instance();
    let (net, mut store) = tiny_qweb(vocab_of(&ins, &tree), 4, shallow, seed);
    if shallow {
        let gu = store.id("qweb.gate_u").unwrap();
        store.get_mut(gu).data[0] = 0.4;
    }
    let next = tree.with_attr(2, Attr::Class, "active").unwrap();
    let (s, s2) = (Arc::new(net.encode(&ins, &tree)), Arc::new(net.encode(&ins, &next)));
    let mk = |action: CompositeAction, leaf: usize| Transition {
        instruction: Arc::new(ins.clone()),
        state: Arc::new(tree.clone()),
        action,
        next_state: Arc::new(next.clone()),
        reward: -0.1,
        done: false,
        encoded: Some((s.clone(), s2.clone())),
        leaf_action: Some(LeafAction {
            leaf,
            verb: action.verb,
            field: if action.verb == Verb::Type { action.field_index } else { None },
        }),
    };
    let batch = [mk(CompositeAction::click(2), 1), mk(CompositeAction::type_field(1, 1), 0)];
    let refs: Vec<&Transition> = batch.iter().collect();
    let targets = [0.7, -0.4];
    loss_gradcheck(&mut store, 1e-5, &|p, g| {
        td_loss_and_grad(&refs, &targets, &net, p, &mut Tape::new(), g).unwrap()
    })
}

/// The INET regression loss on two keys of the two-leaf page.
pub fn inet_loss_gradcheck(seed: u64) -> f64 {
    let (ins, tree) = two_leaf_instance();
    let (net, mut store) = tiny_inet(vocab_of(&ins, &tree), 4, seed);
    let goal = Arc::new(net.encode_goal(&tree));
    let batch = [
        InetTransition { goal: goal.clone(), key: Arc::new(net.encode_key("from")), element_pos: 1, attribute: Attr::Value, reward: 1.0 },
        InetTransition { goal: goal.clone(), key: Arc::new(net.encode_key("to")), element_pos: 2, attribute: Attr::Tag, reward: -1.0 },
    ];
    let refs: Vec<&InetTransition> = batch.iter().collect();
    loss_gradcheck(&mut store, 1e-5, &|p, g| inet_loss_and_grad(&net, p, &refs, &mut Tape::new(), g).unwrap())
}
