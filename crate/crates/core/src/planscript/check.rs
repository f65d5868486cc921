use super::{Expr, Program, Statement};
use crate::scene::RobotSpec;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgKind {
    Name,
    Position,
    Angle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub name: &'static str,
    pub args: &'static [ArgKind],
    pub mutating: bool,
}

pub const SIGNATURES: [Signature; 8] = [
    Signature { name: "get_position", args: &[ArgKind::Name], mutating: false },
    Signature { name: "get_size", args: &[ArgKind::Name], mutating: false },
    Signature { name: "open_gripper", args: &[], mutating: true },
    Signature { name: "close_gripper", args: &[], mutating: true },
    Signature { name: "move_to_position", args: &[ArgKind::Position], mutating: true },
    Signature { name: "walk_to_position", args: &[ArgKind::Position], mutating: true },
    Signature { name: "climb_to_position", args: &[ArgKind::Position], mutating: true },
    Signature { name: "push_to_position", args: &[ArgKind::Name, ArgKind::Position, ArgKind::Angle], mutating: true },
];

pub fn signature(name: &str) -> Option<&'static Signature> {
    SIGNATURES.iter().find(|s| s.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    UnknownSkill,
    Arity,
    UnboundVariable,
    NestedSkill,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub statement: usize,
    pub kind: FindingKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub findings: Vec<Finding>,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in &self.findings {
            writeln!(f, "statement {}: {}", x.statement + 1, x.message)?;
        }
        Ok(())
    }
}

/// Checks skill names and arity against the robot, variable binding order,
/// and that mutating skills are only invoked as whole statements.
pub fn static_check(program: &Program, robot: &RobotSpec) -> CheckReport {
    let mut report = CheckReport::default();
    let mut bound: HashSet<&str> = HashSet::new();
    for (i, stmt) in program.statements.iter().enumerate() {
        let mut push = |kind, message: String| report.findings.push(Finding { statement: i, kind, message });
        let top = match stmt {
            Statement::Call(c) => Some(c as *const _),
            Statement::Bind { .. } => None,
        };
        stmt.for_each_call(&mut |c| {
            if !robot.has_skill(&c.name) {
                push(
                    FindingKind::UnknownSkill,
                    format!("`{}` is not a skill of this {} robot", c.name, robot.embodiment),
                );
                return;
            }
            let Some(sig) = signature(&c.name) else {
                push(FindingKind::UnknownSkill, format!("`{}` has no known signature", c.name));
                return;
            };
            if sig.args.len() != c.args.len() {
                push(
                    FindingKind::Arity,
                    format!("`{}` takes {} argument(s), got {}", c.name, sig.args.len(), c.args.len()),
                );
            }
            if sig.mutating && top != Some(c as *const _) {
                push(FindingKind::NestedSkill, format!("`{}` must be called as a statement of its own", c.name));
            }
        });
        let expr = match stmt {
            Statement::Bind { expr, .. } => expr.clone(),
            Statement::Call(c) => Expr::Call(c.clone()),
        };
        let mut unbound = BTreeSet::new();
        expr.for_each_var(&mut |v| {
            if !bound.contains(v) {
                unbound.insert(v.to_string());
            }
        });
        for v in unbound {
            report.findings.push(Finding {
                statement: i,
                kind: FindingKind::UnboundVariable,
                message: format!("variable `{v}` is used before it is bound"),
            });
        }
        if let Statement::Bind { name, .. } = stmt {
            bound.insert(name);
        }
    }
    report
}

/// A mutating skill call together with the object names its arguments
/// derive from, through string literals and variable bindings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticCall {
    pub statement: usize,
    pub skill: String,
    pub objects: Vec<String>,
}

impl StaticCall {
    /// `skill` or `skill:obj_a,obj_b`.
    pub fn token(&self) -> String {
        if self.objects.is_empty() {
            self.skill.clone()
        } else {
            format!("{}:{}", self.skill, self.objects.join(","))
        }
    }
}

fn provenance(e: &Expr, env: &BTreeMap<String, BTreeSet<String>>, out: &mut BTreeSet<String>) {
    match e {
        Expr::Str(s) => {
            out.insert(s.clone());
        }
        Expr::Var(v) => {
            if let Some(s) = env.get(v) {
                out.extend(s.iter().cloned());
            }
        }
        Expr::Vector(items) => items.iter().for_each(|x| provenance(x, env, out)),
        Expr::Component(x, _) | Expr::Neg(x) => provenance(x, env, out),
        Expr::Binary(_, l, r) => {
            provenance(l, env, out);
            provenance(r, env, out);
        }
        Expr::Call(c) => c.args.iter().for_each(|x| provenance(x, env, out)),
        Expr::Number(..) => {}
    }
}

pub fn mutating_calls(program: &Program) -> Vec<StaticCall> {
    let mut env: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, stmt) in program.statements.iter().enumerate() {
        stmt.for_each_call(&mut |c| {
            if signature(&c.name).is_some_and(|s| s.mutating) {
                let mut objs = BTreeSet::new();
                c.args.iter().for_each(|a| provenance(a, &env, &mut objs));
                out.push(StaticCall { statement: i, skill: c.name.clone(), objects: objs.into_iter().collect() });
            }
        });
        if let Statement::Bind { name, expr } = stmt {
            let mut objs = BTreeSet::new();
            provenance(expr, &env, &mut objs);
            env.insert(name.clone(), objs);
        }
    }
    out
}

/// Space-separated token string of [`mutating_calls`], the subject of the
/// per-task ordering templates.
pub fn skill_token_string(program: &Program) -> String {
    mutating_calls(program).iter().map(StaticCall::token).collect::<Vec<_>>().join(" ")
}
