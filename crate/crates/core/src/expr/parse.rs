//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-' unary | atom
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Note that unary minus binds tighter than `^`, so `-x^2` is `(-x)^2`.

use thiserror::Error;

use super::{BinOp, Expr, Func};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownFunction(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{} at offset {offset}", describe(.kind))]
pub struct ParseError {
    /// Byte offset into the source.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::Syntax(msg) => format!("syntax error: {msg}"),
        ParseErrorKind::UnknownFunction(name) => format!("unknown function `{name}`"),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl Lexer<'_> {
    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(start) else {
            return Ok((start, Tok::End));
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end < bytes.len() && bytes[end] == b'.' {
                end += 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut exp = end + 1;
                if exp < bytes.len() && (bytes[exp] == b'+' || bytes[exp] == b'-') {
                    exp += 1;
                }
                let digits = exp;
                while exp < bytes.len() && bytes[exp].is_ascii_digit() {
                    exp += 1;
                }
                if exp > digits {
                    end = exp;
                }
            }
            let text = &self.src[start..end];
            let value = text.parse::<f64>().map_err(|_| ParseError {
                offset: start,
                kind: ParseErrorKind::Syntax(format!("malformed number `{text}`")),
            })?;
            self.pos = end;
            return Ok((start, Tok::Num(value)));
        }
        if c.is_ascii_alphabetic() {
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_alphanumeric() {
                end += 1;
            }
            self.pos = end;
            return Ok((start, Tok::Ident(self.src[start..end].to_string())));
        }
        if matches!(c, b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')') {
            self.pos += 1;
            return Ok((start, Tok::Sym(c as char)));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ParseError {
            offset: start,
            kind: ParseErrorKind::Syntax(format!("unexpected character `{ch}`")),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

fn syntax(offset: usize, msg: impl Into<String>) -> ParseError {
    ParseError { offset, kind: ParseErrorKind::Syntax(msg.into()) }
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer { src, pos: 0 };
        let (at, tok) = lexer.next()?;
        Ok(Parser { lexer, tok, at })
    }

    fn bump(&mut self) -> Result<(), ParseError> {
        let (at, tok) = self.lexer.next()?;
        self.at = at;
        self.tok = tok;
        Ok(())
    }

    fn eat(&mut self, c: char) -> Result<bool, ParseError> {
        if self.tok == Tok::Sym(c) {
            self.bump()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if self.eat('^')? {
            let exponent = self.factor()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-')? {
            return Ok(self.unary()?.neg());
        }
        self.atom()
    }

    fn group(&mut self, open: usize) -> Result<Expr, ParseError> {
        let end = self.lexer.src.len();
        let inner = self.expr().map_err(|e| {
            if e.offset >= end {
                syntax(open, "unclosed `(`")
            } else {
                e
            }
        })?;
        match self.tok {
            Tok::Sym(')') => {
                self.bump()?;
                Ok(inner)
            }
            Tok::End => Err(syntax(open, "unclosed `(`")),
            _ => Err(syntax(self.at, "expected `)`")),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.at;
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::constant(v))
            }
            Tok::Ident(name) => {
                self.bump()?;
                if self.tok == Tok::Sym('(') {
                    let open = self.at;
                    let func = Func::from_name(&name).ok_or(ParseError {
                        offset: at,
                        kind: ParseErrorKind::UnknownFunction(name),
                    })?;
                    self.bump()?;
                    let arg = self.group(open)?;
                    Ok(Expr::call(func, arg))
                } else {
                    Ok(Expr::var(&name))
                }
            }
            Tok::Sym('(') => {
                self.bump()?;
                self.group(at)
            }
            Tok::Sym(c) => Err(syntax(at, format!("unexpected `{c}`"))),
            Tok::End => Err(syntax(at, "unexpected end of input")),
        }
    }
}

/// Parse an expression from source text.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut parser = Parser::new(source)?;
    let expr = parser.expr()?;
    if parser.tok != Tok::End {
        return Err(syntax(parser.at, "unexpected trailing input"));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VarEnv;

    fn eval(src: &str, env: &VarEnv) -> f64 {
        parse(src).unwrap().evaluate(env).unwrap()
    }

    #[test]
    fn two_free_variables() {
        let e = parse("1 + m/(2*r)").unwrap();
        assert_eq!(e.free_vars().len(), 2);
        assert_eq!(eval("1 + m/(2*r)", &VarEnv::from([("m", 2.0), ("r", 2.0)])), 1.5);
    }

    #[test]
    fn kottler_u_parses_with_bound_parameters() {
        let u = parse("r^2 + 1 - 2*m*r^(2-n)")
            .unwrap()
            .bind("m", 1.0)
            .bind("n", 4.0);
        assert_eq!(u.free_vars().into_iter().collect::<Vec<_>>(), ["r"]);
        let got = u.evaluate(&VarEnv::from([("r", 2.0)])).unwrap();
        assert!((got - 4.5).abs() < 1e-15);
    }

    #[test]
    fn lone_paren_is_error_at_zero() {
        let err = parse("(").unwrap_err();
        assert_eq!(err.offset, 0);
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn unknown_function_reports_name() {
        let err = parse("2 + tanh(x)").unwrap_err();
        assert_eq!(err.offset, 4);
        assert_eq!(err.kind, ParseErrorKind::UnknownFunction("tanh".into()));
    }

    #[test]
    fn precedence_and_associativity() {
        let env = VarEnv::new();
        assert_eq!(eval("2^3^2", &env), 512.0);
        assert_eq!(eval("-2^2", &env), 4.0);
        assert_eq!(eval("-(2^2)", &env), -4.0);
        assert_eq!(eval("8/2/2", &env), 2.0);
        assert_eq!(eval("1-2-3", &env), -4.0);
        assert_eq!(eval("2*3+4*5", &env), 26.0);
        assert_eq!(eval("1.5e2 + .5 + 2E-1", &env), 150.7);
    }

    #[test]
    fn rejects_implicit_multiplication_and_junk() {
        assert!(parse("2 x").is_err());
        assert!(parse("2*").is_err());
        assert!(parse("x $ y").is_err());
        assert_eq!(parse("(1+2").unwrap_err().offset, 0);
        assert_eq!(parse("sqrt(1+").unwrap_err().offset, 4);
        assert_eq!(parse("1+2)").unwrap_err().offset, 3);
    }
}
