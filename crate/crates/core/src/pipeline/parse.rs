use super::{KeyConcept, ParamValue, PlanStep, StageError};
use crate::planscript::Unit;
use regex::Regex;
use std::collections::BTreeMap;
use std::sync::LazyLock;

/// Locates a header line for `label`, ignoring case, leading markdown heading
/// or emphasis markers and surrounding whitespace. Returns the byte offset of
/// the line start and of the content following the label.
fn find_header(text: &str, label: &str, from: usize) -> Option<(usize, usize)> {
    let want = label.to_ascii_lowercase();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        if start < from {
            continue;
        }
        let stripped = line.trim_start_matches(|c: char| c.is_whitespace() || c == '#' || c == '*');
        let lead = line.len() - stripped.len();
        if stripped.len() >= want.len() && stripped.is_char_boundary(want.len()) && stripped[..want.len()].to_ascii_lowercase() == want {
            let rest = &stripped[want.len()..];
            let after = rest.trim_start_matches(['*', ' ', '\t']);
            return Some((start, start + lead + want.len() + (rest.len() - after.len())));
        }
    }
    None
}

/// Splits `text` into the bodies of two labeled sections. Each body runs from
/// its header to the next header, trimmed of surrounding whitespace.
pub fn parse_two_section(text: &str, first_label: &str, second_label: &str) -> Result<(String, String), StageError> {
    let missing = |label: &str| StageError::MissingSection { label: label.to_string() };
    let (_, first_body) = find_header(text, first_label, 0).ok_or_else(|| missing(first_label))?;
    let (second_line, second_body) = find_header(text, second_label, first_body).ok_or_else(|| missing(second_label))?;
    let first = text[first_body..second_line.max(first_body)].trim().to_string();
    let second = text[second_body..].trim().to_string();
    Ok((first, second))
}

static CONCEPT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*(?:[-*]\s*)?key concept\s*:\s*(.+?)\s*\|\s*value\s*:\s*(.+?)\s*\|\s*(?:related\s+)?constraint\s*:\s*(.+?)\s*$")
        .unwrap()
});
static QUANTITY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z°%]*)\.?$").unwrap());

/// Structured `Key concept: … | Value: … | Constraint: …` lines.
pub fn parse_concepts(description: &str) -> Vec<KeyConcept> {
    description
        .lines()
        .filter_map(|line| {
            let c = CONCEPT.captures(line)?;
            let q = QUANTITY.captures(c[2].trim())?;
            let value: f64 = q[1].parse().ok()?;
            let name = c[1].trim().to_string();
            let related_constraint = c[3].trim().to_string();
            (value.is_finite() && !name.is_empty() && !related_constraint.is_empty()).then(|| KeyConcept {
                name,
                value,
                unit: q[2].to_string(),
                related_constraint,
            })
        })
        .collect()
}

static STEP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(?:step\s+)?(\d+)\s*[.):]\s*`?([A-Za-z_]\w*)`?(.*)$").unwrap());

/// Numbered plan lines. Skill names are checked by the caller.
pub fn parse_plan_steps(plan: &str) -> Result<Vec<PlanStep>, StageError> {
    let mut steps = Vec::new();
    for line in plan.lines() {
        let Some(c) = STEP.captures(line) else { continue };
        let index: usize = c[1].parse().map_err(|_| StageError::NonContiguous { found: usize::MAX, expected: steps.len() + 1 })?;
        if index != steps.len() + 1 {
            return Err(StageError::NonContiguous { found: index, expected: steps.len() + 1 });
        }
        let arguments = c[3].trim().trim_start_matches(['-', ':']).trim().to_string();
        steps.push(PlanStep { index, skill: c[2].to_string(), arguments });
    }
    Ok(steps)
}

static ANSWER_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^\s*[-*]?\s*step\s+(\d+)\s*:\s*(.*)$").unwrap());
static ASSIGN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*([A-Za-z_]\w*)\s*=\s*(.*?)\s*$").unwrap());
static VECTOR: LazyLock<Regex> = LazyLock::new(|| {
    let n = r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*";
    Regex::new(&format!(r"^\[{n},{n},{n}\]\s*([a-z]*)$")).unwrap()
});
static SCALAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-z]*)$").unwrap());

fn unit(s: &str) -> Option<Unit> {
    match s {
        "" => Some(Unit::None),
        "m" => Some(Unit::Meter),
        "kg" => Some(Unit::Kilogram),
        "rad" => Some(Unit::Radian),
        _ => None,
    }
}

pub fn parse_param_value(text: &str) -> Option<ParamValue> {
    let text = text.trim().trim_end_matches('.');
    if let Some(c) = VECTOR.captures(text) {
        let v = [c[1].parse().ok()?, c[2].parse().ok()?, c[3].parse().ok()?];
        return v.iter().all(|x: &f64| x.is_finite()).then_some(ParamValue::Vector { value: v, unit: unit(&c[4])? });
    }
    let c = SCALAR.captures(text)?;
    let value: f64 = c[1].parse().ok()?;
    value.is_finite().then_some(ParamValue::Scalar { value, unit: unit(&c[2])? })
}

/// Answer lines keyed by step index. Pieces without `=` are commentary.
pub fn parse_answer(answer: &str) -> Result<BTreeMap<usize, BTreeMap<String, ParamValue>>, StageError> {
    let mut out: BTreeMap<usize, BTreeMap<String, ParamValue>> = BTreeMap::new();
    for line in answer.lines() {
        let Some(c) = ANSWER_LINE.captures(line) else { continue };
        let step: usize = c[1].parse().map_err(|_| StageError::StepIndexMismatch { step: usize::MAX, steps: 0 })?;
        let params = out.entry(step).or_default();
        for piece in c[2].split(';') {
            let Some(a) = ASSIGN.captures(piece) else { continue };
            let name = a[1].to_string();
            let value = parse_param_value(&a[2]).ok_or_else(|| StageError::NonNumeric { step, name: name.clone() })?;
            params.insert(name, value);
        }
    }
    Ok(out)
}

/// Script text from a coder response: the first fenced block if any,
/// otherwise the whole response.
pub fn extract_script(response: &str) -> String {
    let Some(open) = response.find("```") else {
        return response.trim().to_string() + "\n";
    };
    let after = &response[open + 3..];
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
    let body = &after[body_start..];
    let end = body.find("```").unwrap_or(body.len());
    let script = body[..end].trim_end();
    format!("{script}\n")
}
