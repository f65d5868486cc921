use super::check::{signature, ArgKind};
use super::printer::print_statement;
use super::value::{add_units, div_units, mul_units};
use super::{BinOp, Expr, Program, Statement, Unit, Value};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_statements: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_statements: 200 }
    }
}

/// Failure reported by the environment for a skill call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillFault {
    pub kind: String,
    pub detail: String,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SkillOutput {
    pub value: Option<Value>,
    /// Named sub-steps the skill went through, in order.
    #[serde(default)]
    pub phases: Vec<String>,
}

/// World the interpreter dispatches skill calls to.
pub trait Environment {
    fn invoke(&mut self, skill: &str, args: &[Value]) -> Result<SkillOutput, SkillFault>;
    /// Identifier of the current world state.
    fn snapshot_id(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum ExecError {
    Type { message: String },
    DivisionByZero,
    UnboundVariable { name: String },
    BudgetExceeded { limit: usize },
    Skill(SkillFault),
}

impl std::fmt::Display for ExecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExecError::Type { message } => write!(f, "type error: {message}"),
            ExecError::DivisionByZero => f.write_str("division by zero"),
            ExecError::UnboundVariable { name } => write!(f, "unbound variable `{name}`"),
            ExecError::BudgetExceeded { limit } => write!(f, "statement budget of {limit} exceeded"),
            ExecError::Skill(s) => write!(f, "{}: {}", s.kind, s.detail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub skill: String,
    pub args: Vec<Value>,
    pub mutating: bool,
    #[serde(default)]
    pub result: Option<Value>,
    #[serde(default)]
    pub phases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub statement: usize,
    pub source: String,
    pub calls: Vec<CallRecord>,
    #[serde(default)]
    pub value: Option<Value>,
    #[serde(default)]
    pub error: Option<ExecError>,
    pub snapshot: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub entries: Vec<TraceEntry>,
}

impl ExecutionTrace {
    pub fn error(&self) -> Option<&ExecError> {
        self.entries.iter().find_map(|e| e.error.as_ref())
    }

    pub fn completed(&self) -> bool {
        self.error().is_none()
    }

    pub fn final_snapshot(&self) -> Option<&str> {
        self.entries.last().map(|e| e.snapshot.as_str())
    }

    pub fn calls(&self) -> impl Iterator<Item = &CallRecord> {
        self.entries.iter().flat_map(|e| e.calls.iter())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

struct Machine<'a, E: Environment> {
    env: &'a mut E,
    vars: HashMap<String, Value>,
    calls: Vec<CallRecord>,
}

fn type_err(message: impl Into<String>) -> ExecError {
    ExecError::Type { message: message.into() }
}

fn numeric(v: Value) -> Result<([f64; 3], bool, Unit), ExecError> {
    match v {
        Value::Scalar { value, unit } => Ok(([value; 3], false, unit)),
        Value::Vector { value, unit } => Ok((value, true, unit)),
        other => Err(type_err(format!("arithmetic on {}", other.kind()))),
    }
}

impl<E: Environment> Machine<'_, E> {
    fn eval(&mut self, e: &Expr) -> Result<Value, ExecError> {
        match e {
            Expr::Number(v, u) => Ok(Value::scalar(*v, u.unwrap_or(Unit::None))),
            Expr::Str(s) => Ok(Value::Name { value: s.clone() }),
            Expr::Var(v) => {
                self.vars.get(v).cloned().ok_or_else(|| ExecError::UnboundVariable { name: v.clone() })
            }
            Expr::Vector(items) => {
                let mut out = [0.0; 3];
                let mut unit = Unit::None;
                for (k, item) in items.iter().enumerate() {
                    match self.eval(item)? {
                        Value::Scalar { value, unit: u } => {
                            unit = add_units(unit, u)
                                .ok_or_else(|| type_err(format!("vector mixes {unit} and {u} components")))?;
                            out[k] = value;
                        }
                        other => return Err(type_err(format!("vector component is a {}", other.kind()))),
                    }
                }
                Ok(Value::vector(out, unit))
            }
            Expr::Component(inner, axis) => match self.eval(inner)? {
                Value::Vector { value, unit } => Ok(Value::scalar(value[axis.index()], unit)),
                other => Err(type_err(format!("`.{}` applied to a {}", axis.name(), other.kind()))),
            },
            Expr::Neg(inner) => match self.eval(inner)? {
                Value::Scalar { value, unit } => Ok(Value::scalar(-value, unit)),
                Value::Vector { value, unit } => Ok(Value::vector(value.map(|x| -x), unit)),
                other => Err(type_err(format!("negation of a {}", other.kind()))),
            },
            Expr::Binary(op, l, r) => {
                let (a, av, au) = numeric(self.eval(l)?)?;
                let (b, bv, bu) = numeric(self.eval(r)?)?;
                let unit = match op {
                    BinOp::Add | BinOp::Sub => add_units(au, bu),
                    BinOp::Mul => mul_units(au, bu),
                    BinOp::Div => div_units(au, bu),
                }
                .ok_or_else(|| type_err(format!("cannot combine {au} {} {bu}", op.symbol())))?;
                if av && bv && matches!(op, BinOp::Mul | BinOp::Div) {
                    return Err(type_err(format!("`{}` between two vectors", op.symbol())));
                }
                let mut out = [0.0; 3];
                for k in 0..3 {
                    out[k] = match op {
                        BinOp::Add => a[k] + b[k],
                        BinOp::Sub => a[k] - b[k],
                        BinOp::Mul => a[k] * b[k],
                        BinOp::Div => {
                            if b[k] == 0.0 {
                                return Err(ExecError::DivisionByZero);
                            }
                            a[k] / b[k]
                        }
                    };
                }
                if av || bv {
                    Ok(Value::vector(out, unit))
                } else {
                    Ok(Value::scalar(out[0], unit))
                }
            }
            Expr::Call(c) => {
                let sig = signature(&c.name).ok_or_else(|| type_err(format!("unknown skill `{}`", c.name)))?;
                if sig.args.len() != c.args.len() {
                    return Err(type_err(format!("`{}` takes {} argument(s)", c.name, sig.args.len())));
                }
                let mut args = Vec::with_capacity(c.args.len());
                for (a, kind) in c.args.iter().zip(sig.args) {
                    let v = self.eval(a)?;
                    let ok = matches!(
                        (kind, &v),
                        (ArgKind::Name, Value::Name { .. })
                            | (ArgKind::Position, Value::Vector { unit: Unit::None | Unit::Meter, .. })
                            | (ArgKind::Angle, Value::Scalar { unit: Unit::None | Unit::Radian, .. })
                    );
                    if !ok {
                        return Err(type_err(format!("`{}` expects {:?} argument, got {v}", c.name, kind)));
                    }
                    args.push(v);
                }
                let mut rec =
                    CallRecord { skill: c.name.clone(), args, mutating: sig.mutating, result: None, phases: vec![] };
                let outcome = self.env.invoke(&c.name, &rec.args);
                match outcome {
                    Ok(out) => {
                        rec.result = out.value.clone();
                        rec.phases = out.phases;
                        self.calls.push(rec);
                        Ok(out.value.unwrap_or(Value::Unit))
                    }
                    Err(fault) => {
                        self.calls.push(rec);
                        Err(ExecError::Skill(fault))
                    }
                }
            }
        }
    }
}

/// Runs the program statement by statement, halting on the first error or
/// when the statement budget is spent.
pub fn interpret<E: Environment>(program: &Program, env: &mut E, limits: Limits) -> ExecutionTrace {
    let mut trace = ExecutionTrace::default();
    let mut m = Machine { env, vars: HashMap::new(), calls: Vec::new() };
    for (i, stmt) in program.statements.iter().enumerate() {
        if i >= limits.max_statements {
            trace.entries.push(TraceEntry {
                statement: i,
                source: print_statement(stmt),
                calls: vec![],
                value: None,
                error: Some(ExecError::BudgetExceeded { limit: limits.max_statements }),
                snapshot: m.env.snapshot_id(),
            });
            break;
        }
        let result = m.eval(&stmt.expr());
        let calls = std::mem::take(&mut m.calls);
        let (value, error) = match result {
            Ok(v) => {
                if let Statement::Bind { name, .. } = stmt {
                    m.vars.insert(name.clone(), v.clone());
                }
                (Some(v), None)
            }
            Err(e) => (None, Some(e)),
        };
        let halt = error.is_some();
        trace.entries.push(TraceEntry {
            statement: i,
            source: print_statement(stmt),
            calls,
            value,
            error,
            snapshot: m.env.snapshot_id(),
        });
        if halt {
            break;
        }
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[derive(Default)]
    struct Counter {
        moves: usize,
    }

    impl Environment for Counter {
        fn invoke(&mut self, skill: &str, args: &[Value]) -> Result<SkillOutput, SkillFault> {
            match skill {
                "get_position" | "get_size" => {
                    Ok(SkillOutput { value: Some(Value::vector([1.0, 2.0, 3.0], Unit::Meter)), phases: vec![] })
                }
                "push_to_position" if matches!(&args[0], Value::Name { value } if value == "cube") => {
                    Err(SkillFault { kind: "over_mass_limit".into(), detail: "too heavy".into(), values: BTreeMap::new() })
                }
                _ => {
                    self.moves += 1;
                    Ok(SkillOutput::default())
                }
            }
        }

        fn snapshot_id(&self) -> String {
            format!("s{}", self.moves)
        }
    }

    fn run(src: &str) -> ExecutionTrace {
        interpret(&parse(src).unwrap(), &mut Counter::default(), Limits::default())
    }

    #[test]
    fn queries_do_not_mutate() {
        let t = run("a = get_position('milk')\nb = get_size('milk')\nc = a + b");
        assert!(t.entries.iter().all(|e| e.snapshot == "s0"));
        assert_eq!(t.entries[2].value, Some(Value::vector([2.0, 4.0, 6.0], Unit::Meter)));
    }

    #[test]
    fn halts_on_skill_error() {
        let t = run("p = get_position('cube')\npush_to_position('cube', p + [1, 0, 0], 0)\nwalk_to_position([0, 0, 0])");
        assert_eq!(t.entries.len(), 2);
        assert!(matches!(&t.entries[1].error, Some(ExecError::Skill(f)) if f.kind == "over_mass_limit"));
    }

    #[test]
    fn unit_mismatch_is_type_error() {
        let t = run("x = 1m + 2kg");
        assert!(matches!(t.entries[0].error, Some(ExecError::Type { .. })));
        let t = run("x = 2m * 3\ny = x / 2m\nz = [1, 2, 3] * 2");
        assert!(t.completed());
        assert_eq!(t.entries[1].value, Some(Value::scalar(3.0, Unit::None)));
    }

    #[test]
    fn division_by_zero() {
        let t = run("x = 1 / (2 - 2)");
        assert_eq!(t.entries[0].error, Some(ExecError::DivisionByZero));
    }

    #[test]
    fn position_argument_must_be_length() {
        let t = run("walk_to_position([1kg, 0, 0])");
        assert!(matches!(t.entries[0].error, Some(ExecError::Type { .. })));
    }

    #[test]
    fn statement_budget() {
        let src = "open_gripper()\n".repeat(5);
        let t = interpret(&parse(&src).unwrap(), &mut Counter::default(), Limits { max_statements: 3 });
        assert_eq!(t.entries.len(), 4);
        assert_eq!(t.entries[3].error, Some(ExecError::BudgetExceeded { limit: 3 }));
    }

    #[test]
    fn trace_json_roundtrip() {
        let t = run("p = get_position('x')\nmove_to_position(p)");
        assert_eq!(ExecutionTrace::from_json(&t.to_json()).unwrap(), t);
    }
}
