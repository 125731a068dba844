//! Parameter-free preprocessing of an (instruction, DOM) pair.

use crate::dom::{DomTree, ElementId, Instruction};
use crate::text::{set_features, tokenize};

use super::vocab::Vocab;

/// Width of one shallow feature vector: key and value set features, then the
/// mean of the two siblings' own features.
pub const SHALLOW_DIM: usize = 12;
const OWN_DIM: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedInstruction {
    pub keys: Vec<Vec<usize>>,
    pub values: Vec<Vec<usize>>,
    key_tokens: Vec<Vec<String>>,
    value_tokens: Vec<Vec<String>>,
}

impl EncodedInstruction {
    pub fn new(vocab: &Vocab, instruction: &Instruction) -> Self {
        let key_tokens: Vec<Vec<String>> = instruction.fields.iter().map(|f| tokenize(&f.key)).collect();
        let value_tokens: Vec<Vec<String>> = instruction.fields.iter().map(|f| tokenize(&f.value)).collect();
        EncodedInstruction {
            keys: key_tokens.iter().map(|t| vocab.encode_tokens(t)).collect(),
            values: value_tokens.iter().map(|t| vocab.encode_tokens(t)).collect(),
            key_tokens,
            value_tokens,
        }
    }

    pub fn num_fields(&self) -> usize {
        self.keys.len()
    }
}

/// Fields × leaves matrix of shallow feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ShallowFeatures {
    pub fields: usize,
    pub leaves: usize,
    /// Row `e * fields + f` holds the features of leaf `e` against field `f`.
    pub data: Vec<f64>,
}

impl ShallowFeatures {
    pub fn get(&self, field: usize, leaf: usize) -> &[f64] {
        let r = leaf * self.fields + field;
        &self.data[r * SHALLOW_DIM..(r + 1) * SHALLOW_DIM]
    }
}

/// Everything the network needs from one state, with no parameters involved.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedState {
    pub instruction: EncodedInstruction,
    /// Element ids in linearized order.
    pub order: Vec<ElementId>,
    /// Per element (linearized), the token ids of each non-empty attribute.
    pub attr_tokens: Vec<Vec<Vec<usize>>>,
    /// Per element and field, the overlap words of each attribute (may be empty).
    pub overlaps: Vec<Vec<Vec<Vec<usize>>>>,
    /// Linearized positions of the leaves.
    pub leaf_pos: Vec<usize>,
    pub leaf_ids: Vec<ElementId>,
    pub shallow: ShallowFeatures,
}

impl EncodedState {
    pub fn new(vocab: &Vocab, instruction: &Instruction, tree: &DomTree) -> Self {
        Self::with_instruction(vocab, EncodedInstruction::new(vocab, instruction), tree)
    }

    pub fn with_instruction(vocab: &Vocab, instruction: EncodedInstruction, tree: &DomTree) -> Self {
        let order = tree.linearize().to_vec();
        let nf = instruction.num_fields();
        let mut attr_tokens = Vec::with_capacity(order.len());
        let mut overlaps = Vec::with_capacity(order.len());
        let mut own = Vec::with_capacity(order.len());
        let mut leaf_pos = Vec::new();
        let mut leaf_ids = Vec::new();
        for (pos, &id) in order.iter().enumerate() {
            let el = tree.get(id).expect("linearized id exists");
            if el.is_leaf {
                leaf_pos.push(pos);
                leaf_ids.push(id);
            }
            let toks: Vec<Vec<String>> = el
                .attrs
                .iter()
                .map(|(_, v)| tokenize(v))
                .filter(|t| !t.is_empty())
                .collect();
            attr_tokens.push(toks.iter().map(|t| vocab.encode_tokens(t)).collect());
            let mut per_field = Vec::with_capacity(nf);
            let mut feats = Vec::with_capacity(nf);
            for f in 0..nf {
                let value = &instruction.value_tokens[f];
                per_field.push(
                    toks.iter()
                        .map(|t| {
                            t.iter()
                                .filter(|w| value.contains(w))
                                .map(|w| vocab.id(w))
                                .collect::<Vec<_>>()
                        })
                        .collect::<Vec<_>>(),
                );
                let mut fv = [0.0f64; OWN_DIM];
                for t in &toks {
                    let k = set_features(&instruction.key_tokens[f], t);
                    let v = set_features(value, t);
                    for j in 0..3 {
                        fv[j] = fv[j].max(k[j]);
                        fv[3 + j] = fv[3 + j].max(v[j]);
                    }
                }
                feats.push(fv);
            }
            overlaps.push(per_field);
            own.push((id, feats));
        }
        let own_of = |id: Option<ElementId>, f: usize| -> [f64; OWN_DIM] {
            id.and_then(|id| own.iter().find(|(i, _)| *i == id))
                .map_or([0.0; OWN_DIM], |(_, fs)| fs[f])
        };
        let mut data = Vec::with_capacity(leaf_pos.len() * nf * SHALLOW_DIM);
        for &pos in &leaf_pos {
            let (left, right) = tree.siblings(order[pos]);
            for f in 0..nf {
                let (l, r) = (own_of(left, f), own_of(right, f));
                data.extend_from_slice(&own[pos].1[f]);
                for j in 0..OWN_DIM {
                    data.push(0.5 * (l[j] + r[j]));
                }
            }
        }
        let shallow = ShallowFeatures {
            fields: nf,
            leaves: leaf_pos.len(),
            data,
        };
        EncodedState {
            instruction,
            order,
            attr_tokens,
            overlaps,
            leaf_pos,
            leaf_ids,
            shallow,
        }
    }

    pub fn num_leaves(&self) -> usize {
        self.leaf_pos.len()
    }

    pub fn num_fields(&self) -> usize {
        self.instruction.num_fields()
    }

    pub fn leaf_index(&self, id: ElementId) -> Option<usize> {
        self.leaf_ids.iter().position(|&l| l == id)
    }
}

/// Shallow features of `instruction` against the leaves of `tree`.
pub fn shallow_features(instruction: &Instruction, tree: &DomTree) -> ShallowFeatures {
    EncodedState::new(&Vocab::from_texts(Vec::<String>::new()), instruction, tree).shallow
}
