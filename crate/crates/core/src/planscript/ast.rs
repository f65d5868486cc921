use serde::{Deserialize, Serialize};
use std::fmt;

/// Physical unit of a scalar or vector value. `None` marks a plain numeral,
/// which adopts the unit of whatever it is combined with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    None,
    Meter,
    Kilogram,
    Radian,
}

impl Unit {
    pub fn suffix(self) -> &'static str {
        match self {
            Unit::None => "",
            Unit::Meter => "m",
            Unit::Kilogram => "kg",
            Unit::Radian => "rad",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::None => "dimensionless",
            other => other.suffix(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["x", "y", "z"][self as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Call {
    pub name: String,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Number(f64, Option<Unit>),
    Str(String),
    Vector(Box<[Expr; 3]>),
    Var(String),
    Component(Box<Expr>, Axis),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Call),
}

impl Expr {
    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Binding strength used by the printer: 1 additive, 2 multiplicative,
    /// 3 prefix minus, 4 atoms and postfix access.
    pub fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }

    /// Visits every call in evaluation order (arguments before the call).
    pub fn for_each_call<'a>(&'a self, f: &mut impl FnMut(&'a Call)) {
        match self {
            Expr::Vector(items) => items.iter().for_each(|e| e.for_each_call(f)),
            Expr::Component(e, _) | Expr::Neg(e) => e.for_each_call(f),
            Expr::Binary(_, l, r) => {
                l.for_each_call(f);
                r.for_each_call(f);
            }
            Expr::Call(c) => {
                c.args.iter().for_each(|e| e.for_each_call(f));
                f(c);
            }
            Expr::Number(..) | Expr::Str(_) | Expr::Var(_) => {}
        }
    }

    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Var(v) => f(v),
            Expr::Vector(items) => items.iter().for_each(|e| e.for_each_var(f)),
            Expr::Component(e, _) | Expr::Neg(e) => e.for_each_var(f),
            Expr::Binary(_, l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
            Expr::Call(c) => c.args.iter().for_each(|e| e.for_each_var(f)),
            Expr::Number(..) | Expr::Str(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Statement {
    Bind { name: String, expr: Expr },
    Call(Call),
}

impl Statement {
    /// The expression evaluated by this statement.
    pub fn expr(&self) -> Expr {
        match self {
            Statement::Bind { expr, .. } => expr.clone(),
            Statement::Call(c) => Expr::Call(c.clone()),
        }
    }

    pub fn for_each_call<'a>(&'a self, f: &mut impl FnMut(&'a Call)) {
        match self {
            Statement::Bind { expr, .. } => expr.for_each_call(f),
            Statement::Call(c) => {
                c.args.iter().for_each(|e| e.for_each_call(f));
                f(c);
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub statements: Vec<Statement>,
}
