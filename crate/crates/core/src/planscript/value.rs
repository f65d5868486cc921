use super::Unit;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Runtime value of a plan-script expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Value {
    Scalar { value: f64, unit: Unit },
    Vector { value: [f64; 3], unit: Unit },
    Name { value: String },
    Unit,
}

impl Value {
    pub fn scalar(value: f64, unit: Unit) -> Value {
        Value::Scalar { value, unit }
    }

    pub fn vector(value: [f64; 3], unit: Unit) -> Value {
        Value::Vector { value, unit }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Scalar { .. } => "scalar",
            Value::Vector { .. } => "vector",
            Value::Name { .. } => "object name",
            Value::Unit => "unit",
        }
    }

    pub fn as_vector(&self) -> Option<[f64; 3]> {
        match self {
            Value::Vector { value, .. } => Some(*value),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Scalar { value, unit } => write!(f, "{value}{}", unit.suffix()),
            Value::Vector { value, unit } => {
                write!(f, "[{}, {}, {}]{}", value[0], value[1], value[2], unit.suffix())
            }
            Value::Name { value } => write!(f, "'{value}'"),
            Value::Unit => f.write_str("()"),
        }
    }
}

/// Unit of `a + b` / `a - b`.
pub fn add_units(a: Unit, b: Unit) -> Option<Unit> {
    match (a, b) {
        (Unit::None, u) | (u, Unit::None) => Some(u),
        (a, b) if a == b => Some(a),
        _ => None,
    }
}

pub fn mul_units(a: Unit, b: Unit) -> Option<Unit> {
    match (a, b) {
        (Unit::None, u) | (u, Unit::None) => Some(u),
        _ => None,
    }
}

pub fn div_units(a: Unit, b: Unit) -> Option<Unit> {
    match (a, b) {
        (u, Unit::None) => Some(u),
        (a, b) if a == b => Some(Unit::None),
        _ => None,
    }
}
