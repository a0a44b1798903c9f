//! Pratt parser for the expression grammar.
//!
//! Numbers are decimal integers; `3/4` is a division. Operators are
//! `+ - * / ^` with `^` right-associative and unary minus binding below
//! `^`. Functions take one parenthesized argument. There is no implicit
//! multiplication.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::expr::{func, Expr, Func};
use crate::jet::JetContext;

use super::ParseDiagnostic;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

const FUNCTIONS: [&str; 6] = ["exp", "log", "sin", "cos", "tan", "sqrt"];
const UNARY_BP: u8 = 25;

fn infix_bp(op: char) -> (u8, u8) {
    match op {
        '+' | '-' => (10, 11),
        '*' | '/' => (20, 21),
        '^' => (31, 30),
        _ => unreachable!(),
    }
}

/// Line and column (both 1-based, column in characters) of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn diag(src: &str, offset: usize, message: impl Into<String>, expected: &[&str]) -> ParseDiagnostic {
    let (line, col) = line_col(src, offset);
    ParseDiagnostic {
        offset,
        line,
        col,
        message: message.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '0'..='9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                Tok::Num(src[start..i].parse().expect("digits"))
            }
            'a'..='z' | 'A'..='Z' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                if src[start..i].ends_with('_') && i < bytes.len() && bytes[i] == b'[' {
                    while i < bytes.len() && bytes[i] != b']' {
                        if !(bytes[i].is_ascii_digit() || bytes[i] == b',' || bytes[i] == b'[') {
                            return Err(diag(src, i, "malformed derivative index", &["digit", ",", "]"]));
                        }
                        i += 1;
                    }
                    if i == bytes.len() {
                        return Err(diag(src, i, "unterminated derivative index", &["]"]));
                    }
                    i += 1;
                }
                Tok::Ident(src[start..i].to_string())
            }
            '+' | '-' | '*' | '/' | '^' => {
                i += 1;
                Tok::Op(c)
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            _ => {
                let ch = src[i..].chars().next().unwrap();
                return Err(diag(src, i, format!("unexpected character `{}`", ch), &[]));
            }
        };
        out.push(Token { tok, offset: start });
    }
    out.push(Token { tok: Tok::End, offset: src.len() });
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    ctx: &'a JetContext,
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, offset: usize, message: impl Into<String>, expected: &[&str]) -> Result<T, ParseDiagnostic> {
        Err(diag(self.src, offset, message, expected))
    }

    fn after_operand(&self) -> Vec<&'static str> {
        let mut v = vec!["+", "-", "*", "/", "^"];
        v.push(if self.depth > 0 { ")" } else { "end of input" });
        v
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseDiagnostic> {
        let mut lhs = self.prefix()?;
        loop {
            let t = self.peek().clone();
            match t.tok {
                Tok::End => break,
                Tok::RParen => {
                    if self.depth == 0 {
                        return self.err(t.offset, "unbalanced `)`", &self.after_operand());
                    }
                    break;
                }
                Tok::Op(op) => {
                    let (l, r) = infix_bp(op);
                    if l < min_bp {
                        break;
                    }
                    self.next();
                    let rhs = self.expr(r)?;
                    lhs = match op {
                        '+' => lhs + rhs,
                        '-' => lhs - rhs,
                        '*' => lhs * rhs,
                        '/' => lhs / rhs,
                        _ => lhs.pow(&rhs),
                    };
                }
                _ => return self.err(t.offset, "expected operator", &self.after_operand()),
            }
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseDiagnostic> {
        let t = self.next();
        match t.tok {
            Tok::Num(n) => Ok(Expr::num(BigRational::from_integer(n))),
            Tok::Op('-') => Ok(-self.expr(UNARY_BP)?),
            Tok::LParen => {
                self.depth += 1;
                let e = self.expr(0)?;
                self.depth -= 1;
                let close = self.next();
                if close.tok != Tok::RParen {
                    return self.err(close.offset, "expected `)`", &[")"]);
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                if FUNCTIONS.contains(&name.as_str()) {
                    let open = self.next();
                    if open.tok != Tok::LParen {
                        return self.err(open.offset, format!("expected `(` after `{}`", name), &["("]);
                    }
                    self.depth += 1;
                    let arg = self.expr(0)?;
                    self.depth -= 1;
                    let close = self.next();
                    if close.tok != Tok::RParen {
                        return self.err(close.offset, "expected `)`", &[")"]);
                    }
                    return Ok(match name.as_str() {
                        "exp" => func(Func::Exp, &arg),
                        "log" => func(Func::Log, &arg),
                        "sin" => func(Func::Sin, &arg),
                        "cos" => func(Func::Cos, &arg),
                        "tan" => func(Func::Tan, &arg),
                        _ => arg.sqrt(),
                    });
                }
                match self.ctx.canonical_name(&name) {
                    Some(c) => {
                        let e = Expr::sym(&c);
                        if !self.ctx.is_declared(e.as_sym().unwrap()) {
                            return self.err(t.offset, format!("`{}` exceeds the context order", name), &[]);
                        }
                        Ok(e)
                    }
                    None => self.err(t.offset, format!("undeclared symbol `{}`", name), &[]),
                }
            }
            Tok::End => self.err(t.offset, "unexpected end of input", &["expression"]),
            _ => self.err(t.offset, "expected expression", &["number", "identifier", "(", "-"]),
        }
    }
}

/// Parse `text` against the coordinates and parameters of `ctx`.
pub fn parse_expression(text: &str, ctx: &JetContext) -> Result<Expr, ParseDiagnostic> {
    let toks = lex(text)?;
    let mut p = Parser { src: text, ctx, toks, pos: 0, depth: 0 };
    if p.peek().tok == Tok::End {
        return p.err(0, "empty expression", &["expression"]);
    }
    p.expr(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> JetContext {
        JetContext::ode(1, 3).unwrap().with_params(&["c"]).unwrap()
    }

    #[test]
    fn grammar_examples() {
        let c = ctx();
        let e = parse_expression("u_[1] - 3/2*u", &c).unwrap();
        assert_eq!(e, c.u_k(0, 1) - Expr::rat(3, 2) * c.u(0));
        let e = parse_expression("exp(x)^2", &c).unwrap();
        assert_eq!(e, c.x(0).exp().powi(2));
        let d = parse_expression("2x", &c).unwrap_err();
        assert_eq!(d.offset, 1);
        assert_eq!(d.message, "expected operator");
    }

    #[test]
    fn precedence() {
        let c = ctx();
        let x = c.x(0);
        assert_eq!(parse_expression("-x^2", &c).unwrap(), -x.powi(2));
        assert_eq!(parse_expression("2^3^2", &c).unwrap(), Expr::int(512));
        assert_eq!(parse_expression("x - 1 - 1", &c).unwrap(), &x - 2);
        assert_eq!(parse_expression("x1", &c).unwrap(), x);
    }

    #[test]
    fn diagnostics() {
        let c = ctx();
        assert_eq!(parse_expression("(x + 1", &c).unwrap_err().message, "expected `)`");
        assert_eq!(parse_expression("y", &c).unwrap_err().message, "undeclared symbol `y`");
        let d = parse_expression("x +\n  * 2", &c).unwrap_err();
        assert_eq!((d.line, d.col), (2, 3));
        assert!(parse_expression("u_[4]", &c).is_err());
    }
}
