//! Word-level text utilities.

use std::collections::BTreeSet;

use crate::dom::Field;

/// Lowercases and splits on whitespace and ASCII punctuation. No stemming.
pub fn tokenize(s: &str) -> Vec<String> {
    s.split(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

/// Words of `attribute_text` that also occur in the field's value, in
/// attribute order.
pub fn overlap_words(field: &Field, attribute_text: &str) -> Vec<String> {
    let value: BTreeSet<String> = tokenize(&field.value).into_iter().collect();
    tokenize(attribute_text)
        .into_iter()
        .filter(|w| value.contains(w))
        .collect()
}

/// Set-similarity features between two token lists:
/// `[jaccard, a ⊆ b, a ⊇ b]`. Indicators are 0 when either side is empty.
pub fn set_features(a: &[String], b: &[String]) -> [f64; 3] {
    let a: BTreeSet<&str> = a.iter().map(String::as_str).collect();
    let b: BTreeSet<&str> = b.iter().map(String::as_str).collect();
    if a.is_empty() || b.is_empty() {
        return [0.0; 3];
    }
    let inter = a.intersection(&b).count();
    let union = a.union(&b).count();
    let jaccard = inter as f64 / union as f64;
    let subset = if a.is_subset(&b) { 1.0 } else { 0.0 };
    let superset = if a.is_superset(&b) { 1.0 } else { 0.0 };
    [jaccard, subset, superset]
}
