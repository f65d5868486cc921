use super::{ParseError, Unit};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TokenKind {
    Ident(String),
    Number(f64, Option<Unit>),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Dot,
    Newline,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Number(..) => "number".into(),
            TokenKind::Str(s) => format!("string '{s}'"),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Assign => "`=`".into(),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Dot => "`.`".into(),
            TokenKind::Newline => "end of line".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits source into tokens. Newlines are significant except inside
/// brackets or parentheses; `#` starts a comment running to end of line.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut depth = 0usize;

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let err = |msg: String| ParseError { line: span.line, col: span.col, message: msg };
        match c {
            '\n' => {
                if depth == 0 {
                    out.push(Token { kind: TokenKind::Newline, span });
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
                continue;
            }
            '\'' => {
                let start = i;
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(err("unterminated string literal".into())),
                        Some('\'') => break,
                        Some(&ch) if ch.is_ascii_alphanumeric() || ch == '_' || ch == '-' => s.push(ch),
                        Some(&ch) => {
                            return Err(ParseError {
                                line,
                                col: col + (i - start),
                                message: format!("character {ch:?} is not allowed in an object name"),
                            })
                        }
                    }
                    i += 1;
                }
                if s.is_empty() {
                    return Err(err("empty object name".into()));
                }
                i += 1;
                col += i - start;
                out.push(Token { kind: TokenKind::Str(s), span });
                continue;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if matches!(chars.get(i), Some('e' | 'E')) {
                    let mut j = i + 1;
                    if matches!(chars.get(j), Some('+' | '-')) {
                        j += 1;
                    }
                    if chars.get(j).is_some_and(|d| d.is_ascii_digit()) {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value: f64 = text.parse().map_err(|_| err(format!("invalid number `{text}`")))?;
                if !value.is_finite() {
                    return Err(err(format!("number `{text}` is out of range")));
                }
                let suffix_start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let suffix: String = chars[suffix_start..i].iter().collect();
                let unit = match suffix.as_str() {
                    "" => None,
                    "m" => Some(Unit::Meter),
                    "kg" => Some(Unit::Kilogram),
                    "rad" => Some(Unit::Radian),
                    other => {
                        return Err(ParseError {
                            line,
                            col: col + (suffix_start - start),
                            message: format!("unknown unit suffix `{other}` (expected m, kg or rad)"),
                        })
                    }
                };
                col += i - start;
                out.push(Token { kind: TokenKind::Number(value, unit), span });
                continue;
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                col += i - start;
                out.push(Token { kind: TokenKind::Ident(chars[start..i].iter().collect()), span });
                continue;
            }
            _ => {
                let kind = match c {
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    ',' => TokenKind::Comma,
                    '=' => TokenKind::Assign,
                    '+' => TokenKind::Plus,
                    '-' => TokenKind::Minus,
                    '*' => TokenKind::Star,
                    '/' => TokenKind::Slash,
                    '.' => TokenKind::Dot,
                    other => return Err(err(format!("illegal character {other:?}"))),
                };
                match kind {
                    TokenKind::LParen | TokenKind::LBracket => depth += 1,
                    TokenKind::RParen | TokenKind::RBracket => depth = depth.saturating_sub(1),
                    _ => {}
                }
                out.push(Token { kind, span });
            }
        }
        i += 1;
        col += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn query_statement_tokens() {
        use TokenKind::*;
        assert_eq!(
            kinds("x = get_position('milk')"),
            vec![Ident("x".into()), Assign, Ident("get_position".into()), LParen, Str("milk".into()), RParen]
        );
    }

    #[test]
    fn empty_source() {
        assert!(kinds("").is_empty());
    }

    #[test]
    fn illegal_character_is_located() {
        let e = tokenize("x = 3 @ 4").unwrap_err();
        assert_eq!((e.line, e.col), (1, 7));
    }

    #[test]
    fn units_and_components() {
        use TokenKind::*;
        assert_eq!(kinds("0.5m"), vec![Number(0.5, Some(Unit::Meter))]);
        assert_eq!(kinds("p.x"), vec![Ident("p".into()), Dot, Ident("x".into())]);
        assert_eq!(kinds("1.x"), vec![Number(1.0, None), Dot, Ident("x".into())]);
        assert!(tokenize("3ft").is_err());
    }

    #[test]
    fn newlines_inside_brackets_are_dropped() {
        let k = kinds("f([1,\n 2,\n 3])\n# note\ng()");
        assert_eq!(k.iter().filter(|t| **t == TokenKind::Newline).count(), 2);
    }

    #[test]
    fn multibyte_input_is_located() {
        let e = tokenize("a = 'mi\u{e9}lk'").unwrap_err();
        assert_eq!(e.line, 1);
        assert_eq!(e.col, 8);
    }
}
