use super::{GoldConcept, Ratio};
use crate::pipeline::{AnalyzerOutput, KeyConcept};
use std::collections::BTreeSet;

fn tokens(s: &str) -> BTreeSet<String> {
    s.to_lowercase()
        .replace("'s", "")
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Converts `value` in `unit` to `target`; unknown pairs yield `None` and an
/// empty unit is read as the target unit.
fn convert(value: f64, unit: &str, target: &str) -> Option<f64> {
    let factor = |u: &str| match u {
        "m" | "meter" | "meters" => Some(("m", 1.0)),
        "cm" => Some(("m", 0.01)),
        "mm" => Some(("m", 0.001)),
        "kg" | "kilogram" | "kilograms" => Some(("kg", 1.0)),
        "g" => Some(("kg", 0.001)),
        _ => None,
    };
    let u = unit.to_lowercase();
    if u.is_empty() || u == target {
        return Some(value);
    }
    let (dim_a, fa) = factor(&u)?;
    let (dim_b, fb) = factor(target)?;
    (dim_a == dim_b).then_some(value * fa / fb)
}

pub fn concept_matches(c: &KeyConcept, gold: &GoldConcept) -> bool {
    let have = tokens(&c.name);
    let name_ok = std::iter::once(&gold.name).chain(&gold.aliases).any(|n| tokens(n).is_subset(&have));
    let value_ok = convert(c.value, &c.unit, &gold.unit).is_some_and(|v| (v - gold.value).abs() <= gold.tolerance);
    let text = c.related_constraint.to_lowercase();
    let constraint_ok = gold.constraint_keywords.iter().any(|k| text.contains(&k.to_lowercase()));
    name_ok && value_ok && constraint_ok
}

/// Fraction of outputs with at least one matching concept; `None` when there
/// are no outputs.
pub fn score_key_concepts(outputs: &[AnalyzerOutput], gold: &GoldConcept) -> Option<Ratio> {
    if outputs.is_empty() {
        return None;
    }
    let correct = outputs.iter().filter(|o| o.concepts.iter().any(|c| concept_matches(c, gold))).count();
    Some(Ratio::new(correct as u128, outputs.len() as u128))
}
