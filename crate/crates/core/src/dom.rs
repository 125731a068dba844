//! DOM-tree data model shared by the environments and both Q-networks.
//!
//! Trees are immutable values: every state transition produces a new tree
//! with the same structure and updated attributes. Structure-derived data
//! (pre-order, parents) is computed once at construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use crate::text::{overlap_words, tokenize};

pub type ElementId = u32;

/// Default element cap for a single page.
pub const DEFAULT_ELEMENT_CAP: usize = 100;

/// Default upper bound on the number of instruction fields.
pub const DEFAULT_MAX_FIELDS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomError {
    #[error("root element {0} is missing")]
    MissingRoot(ElementId),
    #[error("element {0} is referenced as a child but not defined")]
    UnknownChild(ElementId),
    #[error("element {0} has more than one parent")]
    MultipleParents(ElementId),
    #[error("element {0} is not reachable from the root")]
    Unreachable(ElementId),
    #[error("element {0} is part of a cycle")]
    Cycle(ElementId),
    #[error("element {id}: leaf flag {leaf} disagrees with {children} children")]
    LeafMismatch {
        id: ElementId,
        leaf: bool,
        children: usize,
    },
    #[error("group {0} spans elements with different parents")]
    GroupNotSiblings(u32),
    #[error("tree has {count} elements, cap is {cap}")]
    TooManyElements { count: usize, cap: usize },
    #[error("element id {0} is duplicated")]
    DuplicateId(ElementId),
    #[error("reward-relevant element {0} is missing from the state (malformed environment)")]
    MalformedEnvironment(ElementId),
    #[error("element {0} does not exist")]
    NoSuchElement(ElementId),
    #[error("field key must be non-empty")]
    EmptyKey,
    #[error("field {0:?} has an empty value")]
    EmptyValue(String),
    #[error("duplicate instruction key {0:?}")]
    DuplicateKey(String),
    #[error("instruction has {count} fields, allowed range is 1..={max}")]
    FieldCount { count: usize, max: usize },
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
}

/// The six attribute names an element may carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attr {
    Tag,
    Value,
    Name,
    Text,
    Id,
    Class,
}

impl Attr {
    pub const ALL: [Attr; 6] = [
        Attr::Tag,
        Attr::Value,
        Attr::Name,
        Attr::Text,
        Attr::Id,
        Attr::Class,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Attr::Tag => "tag",
            Attr::Value => "value",
            Attr::Name => "name",
            Attr::Text => "text",
            Attr::Id => "id",
            Attr::Class => "class",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Attr> {
        Attr::ALL.get(i).copied()
    }

    pub fn parse(name: &str) -> Result<Attr, DomError> {
        Attr::ALL
            .iter()
            .copied()
            .find(|a| a.as_str() == name)
            .ok_or_else(|| DomError::UnknownAttribute(name.to_string()))
    }
}

impl fmt::Display for Attr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Attribute map; a missing attribute reads as the empty string.
///
/// Serialized as a JSON object in canonical attribute order with empty
/// entries omitted, so equal maps always produce identical bytes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Attributes([String; 6]);

impl Attributes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, attr: Attr) -> &str {
        &self.0[attr.index()]
    }

    pub fn set(&mut self, attr: Attr, value: impl Into<String>) {
        self.0[attr.index()] = value.into();
    }

    pub fn with(mut self, attr: Attr, value: impl Into<String>) -> Self {
        self.set(attr, value);
        self
    }

    /// Non-empty attributes in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (Attr, &str)> {
        Attr::ALL
            .iter()
            .map(move |&a| (a, self.get(a)))
            .filter(|(_, v)| !v.is_empty())
    }
}

impl Serialize for Attributes {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let present: Vec<_> = self.iter().collect();
        let mut map = serializer.serialize_map(Some(present.len()))?;
        for (attr, value) in present {
            map.serialize_entry(attr.as_str(), value)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Attributes {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct AttrVisitor;

        impl<'de> Visitor<'de> for AttrVisitor {
            type Value = Attributes;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map of attribute name to string")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Attributes, A::Error> {
                let mut attrs = Attributes::default();
                while let Some((key, value)) = access.next_entry::<String, String>()? {
                    let attr = Attr::parse(&key).map_err(de::Error::custom)?;
                    attrs.set(attr, value);
                }
                Ok(attrs)
            }
        }

        deserializer.deserialize_map(AttrVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomElement {
    #[serde(rename = "id")]
    pub element_id: ElementId,
    pub attrs: Attributes,
    pub children: Vec<ElementId>,
    pub group: Option<u32>,
    #[serde(rename = "leaf")]
    pub is_leaf: bool,
}

impl DomElement {
    /// A leaf element with the given tag.
    pub fn leaf(element_id: ElementId, tag: &str) -> Self {
        DomElement {
            element_id,
            attrs: Attributes::new().with(Attr::Tag, tag),
            children: Vec::new(),
            group: None,
            is_leaf: true,
        }
    }

    /// An internal element with the given tag and children.
    pub fn node(element_id: ElementId, tag: &str, children: Vec<ElementId>) -> Self {
        let is_leaf = children.is_empty();
        DomElement {
            element_id,
            attrs: Attributes::new().with(Attr::Tag, tag),
            children,
            group: None,
            is_leaf,
        }
    }

    pub fn with_attr(mut self, attr: Attr, value: impl Into<String>) -> Self {
        self.attrs.set(attr, value);
        self
    }

    pub fn in_group(mut self, group: u32) -> Self {
        self.group = Some(group);
        self
    }

    pub fn attr(&self, attr: Attr) -> &str {
        self.attrs.get(attr)
    }

    pub fn tag(&self) -> &str {
        self.attr(Attr::Tag)
    }
}

#[derive(Serialize, Deserialize)]
struct RawTree {
    root: ElementId,
    elements: Vec<DomElement>,
}

/// A validated DOM tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawTree", into = "RawTree")]
pub struct DomTree {
    root: ElementId,
    elements: BTreeMap<ElementId, DomElement>,
    order: Vec<ElementId>,
    parents: BTreeMap<ElementId, ElementId>,
}

impl PartialEq for DomTree {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.elements == other.elements
    }
}

impl Eq for DomTree {}

impl TryFrom<RawTree> for DomTree {
    type Error = DomError;

    fn try_from(raw: RawTree) -> Result<Self, DomError> {
        DomTree::new(raw.root, raw.elements)
    }
}

impl From<DomTree> for RawTree {
    fn from(tree: DomTree) -> RawTree {
        RawTree {
            root: tree.root,
            elements: tree.elements.into_values().collect(),
        }
    }
}

impl DomTree {
    pub fn new(root: ElementId, elements: Vec<DomElement>) -> Result<Self, DomError> {
        Self::with_cap(root, elements, DEFAULT_ELEMENT_CAP)
    }

    pub fn with_cap(
        root: ElementId,
        elements: Vec<DomElement>,
        cap: usize,
    ) -> Result<Self, DomError> {
        if elements.len() > cap {
            return Err(DomError::TooManyElements {
                count: elements.len(),
                cap,
            });
        }
        let mut map = BTreeMap::new();
        for el in elements {
            let id = el.element_id;
            if map.insert(id, el).is_some() {
                return Err(DomError::DuplicateId(id));
            }
        }
        if !map.contains_key(&root) {
            return Err(DomError::MissingRoot(root));
        }

        let mut parents = BTreeMap::new();
        for el in map.values() {
            if el.is_leaf != el.children.is_empty() {
                return Err(DomError::LeafMismatch {
                    id: el.element_id,
                    leaf: el.is_leaf,
                    children: el.children.len(),
                });
            }
            for &child in &el.children {
                if !map.contains_key(&child) {
                    return Err(DomError::UnknownChild(child));
                }
                if child == root || parents.insert(child, el.element_id).is_some() {
                    return Err(if child == root {
                        DomError::Cycle(child)
                    } else {
                        DomError::MultipleParents(child)
                    });
                }
            }
        }

        // Pre-order traversal with an explicit stack.
        let mut order = Vec::with_capacity(map.len());
        let mut seen = BTreeSet::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                return Err(DomError::Cycle(id));
            }
            order.push(id);
            for &child in map[&id].children.iter().rev() {
                stack.push(child);
            }
        }
        if let Some(&missing) = map.keys().find(|id| !seen.contains(id)) {
            // Unreachable nodes with a parent chain that never meets the root
            // are cycles; anything else is simply detached.
            return Err(if parents.contains_key(&missing) {
                DomError::Cycle(missing)
            } else {
                DomError::Unreachable(missing)
            });
        }

        let mut group_parent: BTreeMap<u32, Option<ElementId>> = BTreeMap::new();
        for el in map.values() {
            if let Some(g) = el.group {
                let parent = parents.get(&el.element_id).copied();
                match group_parent.get(&g) {
                    Some(&p) if p != parent => return Err(DomError::GroupNotSiblings(g)),
                    _ => {
                        group_parent.insert(g, parent);
                    }
                }
            }
        }

        Ok(DomTree {
            root,
            elements: map,
            order,
            parents,
        })
    }

    pub fn root(&self) -> ElementId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, id: ElementId) -> Option<&DomElement> {
        self.elements.get(&id)
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.elements.contains_key(&id)
    }

    pub fn elements(&self) -> impl Iterator<Item = &DomElement> {
        self.elements.values()
    }

    pub fn parent(&self, id: ElementId) -> Option<ElementId> {
        self.parents.get(&id).copied()
    }

    /// Depth-first pre-order over all elements, children in stored order.
    pub fn linearize(&self) -> &[ElementId] {
        &self.order
    }

    /// The actionable elements, in linearization order.
    pub fn leaf_elements(&self) -> Vec<ElementId> {
        self.order
            .iter()
            .copied()
            .filter(|id| self.elements[id].is_leaf)
            .collect()
    }

    /// Siblings sharing the element's group, including the element itself.
    pub fn group_members(&self, id: ElementId) -> Vec<ElementId> {
        let Some(el) = self.get(id) else {
            return Vec::new();
        };
        let Some(g) = el.group else {
            return vec![id];
        };
        match self.parent(id) {
            Some(p) => self.elements[&p]
                .children
                .iter()
                .copied()
                .filter(|c| self.elements[c].group == Some(g))
                .collect(),
            None => vec![id],
        }
    }

    /// Immediate left and right siblings of an element.
    pub fn siblings(&self, id: ElementId) -> (Option<ElementId>, Option<ElementId>) {
        let Some(p) = self.parent(id) else {
            return (None, None);
        };
        let kids = &self.elements[&p].children;
        let pos = kids.iter().position(|&c| c == id).expect("child of its parent");
        let left = pos.checked_sub(1).map(|i| kids[i]);
        let right = kids.get(pos + 1).copied();
        (left, right)
    }

    /// A copy of the tree with one attribute replaced.
    pub fn with_attr(
        &self,
        id: ElementId,
        attr: Attr,
        value: impl Into<String>,
    ) -> Result<DomTree, DomError> {
        let mut next = self.clone();
        next.set_attr(id, attr, value)?;
        Ok(next)
    }

    pub(crate) fn set_attr(
        &mut self,
        id: ElementId,
        attr: Attr,
        value: impl Into<String>,
    ) -> Result<(), DomError> {
        let el = self.elements.get_mut(&id).ok_or(DomError::NoSuchElement(id))?;
        el.attrs.set(attr, value);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<DomTree, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Depth-first pre-order of the tree.
pub fn linearize(tree: &DomTree) -> Vec<ElementId> {
    tree.linearize().to_vec()
}

pub fn leaf_elements(tree: &DomTree) -> Vec<ElementId> {
    tree.leaf_elements()
}

/// A goal page together with the elements the reward is computed from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub tree: DomTree,
    pub relevant: Vec<ElementId>,
}

impl Goal {
    pub fn new(tree: DomTree, relevant: Vec<ElementId>) -> Result<Self, DomError> {
        for &id in &relevant {
            if !tree.contains(id) {
                return Err(DomError::NoSuchElement(id));
            }
        }
        Ok(Goal { tree, relevant })
    }

    /// Relevant elements of `state` that already agree with the goal.
    pub fn is_resolved(&self, state: &DomTree, id: ElementId) -> bool {
        match (state.get(id), self.tree.get(id)) {
            (Some(s), Some(g)) => s.attrs == g.attrs,
            _ => false,
        }
    }

    pub fn is_satisfied(&self, state: &DomTree) -> Result<bool, DomError> {
        Ok(match_count(state, self)? == self.relevant.len())
    }
}

/// Number of reward-relevant elements whose attributes in `state` equal the goal's.
pub fn match_count(state: &DomTree, goal: &Goal) -> Result<usize, DomError> {
    let mut count = 0;
    for &id in &goal.relevant {
        let s = state.get(id).ok_or(DomError::MalformedEnvironment(id))?;
        let g = goal.tree.get(id).ok_or(DomError::MalformedEnvironment(id))?;
        if s.attrs == g.attrs {
            count += 1;
        }
    }
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Field {
    pub key: String,
    pub value: String,
}

impl Field {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Result<Self, DomError> {
        let key = key.into();
        let value = value.into();
        if key.is_empty() {
            return Err(DomError::EmptyKey);
        }
        if value.is_empty() {
            return Err(DomError::EmptyValue(key));
        }
        Ok(Field { key, value })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instruction {
    pub fields: Vec<Field>,
}

impl Instruction {
    pub fn new(fields: Vec<Field>) -> Result<Self, DomError> {
        Self::with_max(fields, DEFAULT_MAX_FIELDS)
    }

    pub fn with_max(fields: Vec<Field>, max: usize) -> Result<Self, DomError> {
        if fields.is_empty() || fields.len() > max {
            return Err(DomError::FieldCount {
                count: fields.len(),
                max,
            });
        }
        let mut keys = BTreeSet::new();
        for f in &fields {
            if f.key.is_empty() {
                return Err(DomError::EmptyKey);
            }
            if f.value.is_empty() {
                return Err(DomError::EmptyValue(f.key.clone()));
            }
            if !keys.insert(f.key.as_str()) {
                return Err(DomError::DuplicateKey(f.key.clone()));
            }
        }
        Ok(Instruction { fields })
    }

    /// Convenience constructor from `(key, value)` pairs.
    pub fn from_pairs<K: Into<String>, V: Into<String>>(
        pairs: impl IntoIterator<Item = (K, V)>,
    ) -> Result<Self, DomError> {
        let fields = pairs
            .into_iter()
            .map(|(k, v)| Field::new(k, v))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(fields)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn value_of(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|f| f.key == key)
            .map(|f| f.value.as_str())
    }

    pub fn index_of_value(&self, value: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.value == value)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, field) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {:?}", field.key, field.value)?;
        }
        f.write_str("}")
    }
}
