use std::fmt;

use super::{BinOp, Expr, Node};

// Binding strength of the grammar levels: expr < term < factor < unary < atom.
const EXPR: u8 = 1;
const TERM: u8 = 2;
const FACTOR: u8 = 3;
const UNARY: u8 = 4;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => ATOM,
        Node::Const(_) | Node::Var(_) | Node::Call(..) => ATOM,
        Node::Neg(_) => UNARY,
        Node::Binary(BinOp::Add | BinOp::Sub, ..) => EXPR,
        Node::Binary(BinOp::Mul | BinOp::Div, ..) => TERM,
        Node::Binary(BinOp::Pow, ..) => FACTOR,
    }
}

fn write_at(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if level(e) < min {
        f.write_str("(")?;
        write_expr(e, f)?;
        f.write_str(")")
    } else {
        write_expr(e, f)
    }
}

pub(super) fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Const(c) => {
            if c.is_sign_negative() {
                write!(f, "(-{})", -c)
            } else {
                write!(f, "{c}")
            }
        }
        Node::Var(name) => f.write_str(name),
        Node::Neg(a) => {
            f.write_str("-")?;
            write_at(a, UNARY, f)
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, f)?;
            f.write_str(")")
        }
        Node::Binary(op, a, b) => {
            let (sym, lhs, rhs) = match op {
                BinOp::Add => (" + ", EXPR, TERM),
                BinOp::Sub => (" - ", EXPR, TERM),
                BinOp::Mul => ("*", TERM, FACTOR),
                BinOp::Div => ("/", TERM, FACTOR),
                BinOp::Pow => ("^", UNARY, FACTOR),
            };
            write_at(a, lhs, f)?;
            f.write_str(sym)?;
            write_at(b, rhs, f)
        }
    }
}
