//! The straight-line plan-script language emitted by the coder stage:
//! tokenizer, parser, canonical printer, static checker and interpreter.

mod ast;
mod check;
mod interp;
mod lexer;
mod parser;
mod printer;
mod value;

pub use ast::{Axis, BinOp, Call, Expr, Program, Statement, Unit};
pub use check::{
    mutating_calls, signature, skill_token_string, static_check, ArgKind, CheckReport, Finding, FindingKind,
    Signature, StaticCall, SIGNATURES,
};
pub use interp::{
    interpret, CallRecord, Environment, ExecError, ExecutionTrace, Limits, SkillFault, SkillOutput, TraceEntry,
};
pub use lexer::{tokenize, Span, Token, TokenKind};
pub use parser::{parse, parse_tokens};
pub use printer::{pretty_print, print_expr, print_statement};
pub use value::Value;

use serde::Serialize;

/// Lexical or syntax error with a 1-based source location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}
