//! State transition rules shared by every environment.
//!
//! - `Type(e, f)` on a text input writes the field value into `value`.
//! - `Click(e)` on a group member activates it and deactivates its group
//!   siblings; on a `toggle` button flips its active flag; on any other
//!   button or link sets the active flag. Clicks on text inputs and static
//!   text change nothing.
//! - Actions on missing or non-leaf elements, types with a missing or
//!   out-of-range field, and clicks carrying a field are rejected as no-ops.

use crate::dom::{Attr, DomElement, DomTree, Instruction};

use super::{CompositeAction, Verb};

/// Class token marking an activated element.
pub const ACTIVE_CLASS: &str = "active";

const TOGGLE_CLASS: &str = "toggle";

#[derive(Clone, Debug, PartialEq)]
pub struct Applied {
    pub tree: DomTree,
    /// False when the action was rejected.
    pub valid: bool,
}

pub fn is_text_input(el: &DomElement) -> bool {
    el.tag() == "input" && el.group.is_none()
}

fn is_button(el: &DomElement) -> bool {
    matches!(el.tag(), "button" | "a")
}

fn has_class(el: &DomElement, token: &str) -> bool {
    el.attr(Attr::Class).split_whitespace().any(|c| c == token)
}

fn with_class(class: &str, token: &str, on: bool) -> String {
    let mut parts: Vec<&str> = class.split_whitespace().filter(|c| *c != token).collect();
    if on {
        parts.push(token);
    }
    parts.join(" ")
}

fn set_active(tree: &mut DomTree, id: u32, on: bool) {
    let class = tree.get(id).map(|e| e.attr(Attr::Class).to_string()).unwrap_or_default();
    tree.set_attr(id, Attr::Class, with_class(&class, ACTIVE_CLASS, on))
        .expect("element exists");
}

pub fn is_active(el: &DomElement) -> bool {
    has_class(el, ACTIVE_CLASS)
}

/// Applies one composite action to a page.
pub fn apply_action(tree: &DomTree, instruction: &Instruction, action: CompositeAction) -> Applied {
    let rejected = || Applied {
        tree: tree.clone(),
        valid: false,
    };
    let Some(el) = tree.get(action.element) else {
        return rejected();
    };
    if !el.is_leaf {
        return rejected();
    }
    match action.verb {
        Verb::Type => {
            let Some(field) = action.field_index.and_then(|f| instruction.fields.get(f)) else {
                return rejected();
            };
            let mut next = tree.clone();
            if is_text_input(el) {
                next.set_attr(action.element, Attr::Value, field.value.clone())
                    .expect("element exists");
            }
            Applied {
                tree: next,
                valid: true,
            }
        }
        Verb::Click => {
            if action.field_index.is_some() {
                return rejected();
            }
            let mut next = tree.clone();
            if el.group.is_some() {
                for member in tree.group_members(action.element) {
                    set_active(&mut next, member, member == action.element);
                }
            } else if is_button(el) {
                let on = if has_class(el, TOGGLE_CLASS) {
                    !is_active(el)
                } else {
                    true
                };
                set_active(&mut next, action.element, on);
            }
            Applied {
                tree: next,
                valid: true,
            }
        }
    }
}
