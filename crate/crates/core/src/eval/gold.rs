use super::EvalError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_GOLD_JSON: &str = include_str!("../../assets/eval/gold.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldConcept {
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub value: f64,
    pub unit: String,
    /// Accepted absolute error on `value`, in `unit`.
    pub tolerance: f64,
    pub constraint: String,
    /// A concept's constraint text refers to the gold constraint when it
    /// contains any of these, case-insensitively.
    pub constraint_keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldParameter {
    pub skill: String,
    #[serde(default)]
    pub object: Option<String>,
    pub target: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldAnnotation {
    pub key_concept: GoldConcept,
    pub oracle_tool_set: Vec<String>,
    pub oracle_uses_tool: bool,
    #[serde(default)]
    pub target_object: Option<String>,
    pub parameter_tolerance: f64,
    /// Regular pattern over the script's mutating-call token string.
    pub ordering_template: String,
    #[serde(default)]
    pub parameters: Vec<GoldParameter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoldSet {
    pub tasks: BTreeMap<String, GoldAnnotation>,
}

impl GoldSet {
    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let set: GoldSet = serde_json::from_str(text).map_err(|e| EvalError::Gold(e.to_string()))?;
        for (k, g) in &set.tasks {
            regex::Regex::new(&g.ordering_template).map_err(|e| EvalError::Gold(format!("{k}: {e}")))?;
        }
        Ok(set)
    }

    pub fn get(&self, key: &str) -> Result<&GoldAnnotation, EvalError> {
        self.tasks.get(key).ok_or_else(|| EvalError::MissingGold(key.to_string()))
    }
}

impl Default for GoldSet {
    fn default() -> Self {
        GoldSet::from_json(DEFAULT_GOLD_JSON).expect("shipped gold file is valid")
    }
}
