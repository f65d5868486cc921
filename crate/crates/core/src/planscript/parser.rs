use super::lexer::{tokenize, Token, TokenKind};
use super::{Axis, BinOp, Call, Expr, ParseError, Program, Statement};

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

/// Parses plan-script source into a program.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source)?;
    parse_tokens(tokens, source)
}

pub fn parse_tokens(tokens: Vec<Token>, source: &str) -> Result<Program, ParseError> {
    let line = source.lines().count().max(1);
    let col = source.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
    let mut p = Parser { tokens, pos: 0, end: (line, col) };
    p.program()
}

impl Parser {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek2(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos + 1).map(|t| &t.kind)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        match self.tokens.get(self.pos) {
            Some(t) => ParseError {
                line: t.span.line,
                col: t.span.col,
                message: format!("expected {expected}, found {}", t.kind.describe()),
            },
            None => ParseError {
                line: self.end.0,
                col: self.end.1,
                message: format!("expected {expected}, found end of input"),
            },
        }
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&kind) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut statements = Vec::new();
        loop {
            while self.peek() == Some(&TokenKind::Newline) {
                self.pos += 1;
            }
            if self.peek().is_none() {
                break;
            }
            statements.push(self.statement()?);
            match self.peek() {
                None | Some(TokenKind::Newline) => {}
                Some(_) => return Err(self.error("end of line")),
            }
        }
        Ok(Program { statements })
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        if let (Some(TokenKind::Ident(name)), Some(TokenKind::Assign)) = (self.peek(), self.peek2()) {
            let name = name.clone();
            self.pos += 2;
            let expr = self.expr()?;
            return Ok(Statement::Bind { name, expr });
        }
        let start = self.pos;
        match self.expr()? {
            Expr::Call(c) => Ok(Statement::Call(c)),
            _ => {
                self.pos = start;
                Err(self.error("a skill call or an assignment"))
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&TokenKind::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        while self.peek() == Some(&TokenKind::Dot) {
            self.pos += 1;
            let axis = match self.peek() {
                Some(TokenKind::Ident(s)) if s == "x" => Axis::X,
                Some(TokenKind::Ident(s)) if s == "y" => Axis::Y,
                Some(TokenKind::Ident(s)) if s == "z" => Axis::Z,
                _ => return Err(self.error("component `x`, `y` or `z`")),
            };
            self.pos += 1;
            e = Expr::Component(Box::new(e), axis);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(TokenKind::Number(v, u)) => {
                self.pos += 1;
                Ok(Expr::Number(v, u))
            }
            Some(TokenKind::Str(s)) => {
                self.pos += 1;
                Ok(Expr::Str(s))
            }
            Some(TokenKind::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&TokenKind::LParen) {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if self.peek() != Some(&TokenKind::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if self.peek() == Some(&TokenKind::Comma) {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(TokenKind::RParen, "`,` or `)`")?;
                    Ok(Expr::Call(Call { name, args }))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            Some(TokenKind::LBracket) => {
                self.pos += 1;
                let a = self.expr()?;
                self.expect(TokenKind::Comma, "`,` (vectors have three components)")?;
                let b = self.expr()?;
                self.expect(TokenKind::Comma, "`,` (vectors have three components)")?;
                let c = self.expr()?;
                self.expect(TokenKind::RBracket, "`]` (vectors have three components)")?;
                Ok(Expr::Vector(Box::new([a, b, c])))
            }
            _ => {
                let e = self.error("an expression");
                self.bump();
                Err(e)
            }
        }
    }
}
