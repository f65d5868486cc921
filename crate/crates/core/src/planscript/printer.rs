use super::{Call, Expr, Program, Statement};
use std::fmt::Write as _;

/// Canonical source text. Parentheses appear only where evaluation order
/// would otherwise change.
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    for s in &program.statements {
        out.push_str(&print_statement(s));
        out.push('\n');
    }
    out
}

pub fn print_statement(s: &Statement) -> String {
    match s {
        Statement::Bind { name, expr } => format!("{name} = {}", print_expr(expr)),
        Statement::Call(c) => print_call(c),
    }
}

fn print_call(c: &Call) -> String {
    let args: Vec<String> = c.args.iter().map(print_expr).collect();
    format!("{}({})", c.name, args.join(", "))
}

fn wrap(e: &Expr, parens: bool) -> String {
    if parens {
        format!("({})", print_expr(e))
    } else {
        print_expr(e)
    }
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Number(v, unit) => {
            let mut s = String::new();
            let _ = write!(s, "{v}");
            if let Some(u) = unit {
                s.push_str(u.suffix());
            }
            s
        }
        Expr::Str(s) => format!("'{s}'"),
        Expr::Var(v) => v.clone(),
        Expr::Call(c) => print_call(c),
        Expr::Vector(items) => {
            format!("[{}, {}, {}]", print_expr(&items[0]), print_expr(&items[1]), print_expr(&items[2]))
        }
        Expr::Component(inner, axis) => format!("{}.{}", wrap(inner, inner.precedence() < 4), axis.name()),
        Expr::Neg(inner) => format!("-{}", wrap(inner, inner.precedence() < 3)),
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            format!("{} {} {}", wrap(l, l.precedence() < p), op.symbol(), wrap(r, r.precedence() <= p))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn roundtrip(src: &str) -> String {
        let p = parse(src).unwrap();
        let printed = pretty_print(&p);
        assert_eq!(parse(&printed).unwrap(), p, "{printed}");
        printed
    }

    #[test]
    fn minimal_parentheses() {
        assert_eq!(roundtrip("x = (1 + 2) * 3"), "x = (1 + 2) * 3\n");
        assert_eq!(roundtrip("x = 1 + (2 * 3)"), "x = 1 + 2 * 3\n");
        assert_eq!(roundtrip("x = 1 - (2 - 3)"), "x = 1 - (2 - 3)\n");
        assert_eq!(roundtrip("x = (1 - 2) - 3"), "x = 1 - 2 - 3\n");
        assert_eq!(roundtrip("x = -(a + b).x"), "x = -(a + b).x\n");
        assert_eq!(roundtrip("x = (-a).y"), "x = (-a).y\n");
    }

    #[test]
    fn empty_program_prints_nothing() {
        assert_eq!(pretty_print(&Program::default()), "");
    }

    #[test]
    fn units_survive() {
        assert_eq!(roundtrip("x = 0.25m + 1e-3m"), "x = 0.25m + 0.001m\n");
        roundtrip("push_to_position('box', [1, 2, 0.5], 0.5rad)");
    }
}
