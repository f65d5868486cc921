use super::{EvalError, FailureClass, GoldAnnotation, TrialRecord};
use crate::planscript::{parse, skill_token_string, ExecutionTrace, Value};

fn target_of(skill: &str, args: &[Value]) -> Option<[f64; 3]> {
    let i = if skill == "push_to_position" { 1 } else { 0 };
    match args.get(i) {
        Some(Value::Vector { value, .. }) => Some(*value),
        _ => None,
    }
}

/// For each gold parameter, the distance from its target to the nearest
/// attempted call of the same skill (and object, for pushes). `None` when no
/// such call was attempted.
pub fn parameter_deviations(trace: &ExecutionTrace, gold: &GoldAnnotation) -> Vec<Option<f64>> {
    gold.parameters
        .iter()
        .map(|p| {
            trace
                .calls()
                .filter(|c| c.skill == p.skill)
                .filter(|c| match &p.object {
                    Some(o) => matches!(c.args.first(), Some(Value::Name { value }) if value == o),
                    None => true,
                })
                .filter_map(|c| target_of(&c.skill, &c.args))
                .map(|t| (0..3).map(|i| (t[i] - p.target[i]).powi(2)).sum::<f64>().sqrt())
                .min_by(f64::total_cmp)
        })
        .collect()
}

/// Failure class of an unsuccessful run, by precedence: wrong or missing
/// tool, then call order against the gold template, then target deviation.
/// Anything else is a logical error.
pub fn classify_error(record: &TrialRecord, gold: &GoldAnnotation) -> Result<FailureClass, EvalError> {
    if record.success {
        return Err(EvalError::Successful);
    }
    let (Some(script), Some(trace)) = (&record.script, &record.trace) else {
        return Err(EvalError::NoScript);
    };
    let tools_used = record
        .manipulated
        .iter()
        .filter(|o| gold.target_object.as_deref() != Some(o.as_str()))
        .any(|o| gold.oracle_tool_set.contains(o));
    if gold.oracle_uses_tool && !tools_used {
        return Ok(FailureClass::ToolUse);
    }
    let tokens = match &record.skill_tokens {
        Some(t) => t.clone(),
        None => parse(script).map(|p| skill_token_string(&p)).map_err(|_| EvalError::NoScript)?,
    };
    let template = regex::Regex::new(&gold.ordering_template).expect("gold templates are validated on load");
    if !template.is_match(&tokens) {
        return Ok(FailureClass::Logical);
    }
    if parameter_deviations(trace, gold).into_iter().flatten().any(|d| d > gold.parameter_tolerance) {
        return Ok(FailureClass::Numerical);
    }
    Ok(FailureClass::Logical)
}
