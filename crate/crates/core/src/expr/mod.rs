//! Closed-form scalar expressions.
//!
//! An [`Expr`] is an immutable tree over named variables. Trees are shared
//! through `Arc`, so differentiating a large expression reuses its subtrees
//! instead of copying them. The smart constructors (`Expr::add`, `Expr::mul`,
//! ...) fold constants and apply the `x*0`, `x*1`, `x+0` rules; nothing more
//! aggressive is attempted.

mod diff;
mod eval;
mod parse;
mod print;
mod wide;

use std::collections::BTreeSet;
use std::fmt;
use std::ops;
use std::sync::Arc;

pub use eval::{CoordEnv, Env, EvalError, VarEnv};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use wide::Wide;

/// Unary functions understood by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Abs,
    /// Derivative of `abs`; undefined at zero.
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug)]
pub enum Node {
    Const(f64),
    Var(Arc<str>),
    Neg(Expr),
    Binary(BinOp, Expr, Expr),
    Call(Func, Expr),
}

/// Shared, immutable expression tree.
#[derive(Clone, Debug)]
pub struct Expr(Arc<Node>);

// The operator traits forward to these folding constructors.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr(Arc::new(Node::Const(value)))
    }

    pub fn var(name: &str) -> Expr {
        Expr(Arc::new(Node::Var(Arc::from(name))))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    /// Value of the tree if it is a literal constant.
    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// Names of all variables appearing in the tree.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(name) => {
                out.insert(name.to_string());
            }
            Node::Neg(a) | Node::Call(_, a) => a.collect_vars(out),
            Node::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Call(_, a) => 1 + a.size(),
            Node::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Replace every occurrence of `name` by `with`, re-folding constants.
    pub fn substitute(&self, name: &str, with: &Expr) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(v) => {
                if &**v == name {
                    with.clone()
                } else {
                    self.clone()
                }
            }
            Node::Neg(a) => a.substitute(name, with).neg(),
            Node::Call(f, a) => Expr::call(*f, a.substitute(name, with)),
            Node::Binary(op, a, b) => {
                Expr::binary(*op, a.substitute(name, with), b.substitute(name, with))
            }
        }
    }

    /// Bind a parameter to a numeric value.
    pub fn bind(&self, name: &str, value: f64) -> Expr {
        self.substitute(name, &Expr::constant(value))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        match op {
            BinOp::Add => Expr::add(a, b),
            BinOp::Sub => Expr::sub(a, b),
            BinOp::Mul => Expr::mul(a, b),
            BinOp::Div => Expr::div(a, b),
            BinOp::Pow => Expr::pow(a, b),
        }
    }

    fn raw(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr(Arc::new(Node::Binary(op, a, b)))
    }

    /// Fold `op(a, b)` when both sides are literals and the result is finite.
    fn fold(op: BinOp, a: &Expr, b: &Expr) -> Option<Expr> {
        let (x, y) = (a.as_const()?, b.as_const()?);
        let v = eval::apply_binary(op, x, y).ok()?;
        v.is_finite().then(|| Expr::constant(v))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        if let Some(c) = Expr::fold(BinOp::Add, &a, &b) {
            return c;
        }
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        Expr::raw(BinOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if let Some(c) = Expr::fold(BinOp::Sub, &a, &b) {
            return c;
        }
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return b.neg();
        }
        Expr::raw(BinOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if let Some(c) = Expr::fold(BinOp::Mul, &a, &b) {
            return c;
        }
        if a.is_zero() || b.is_zero() {
            return Expr::zero();
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        Expr::raw(BinOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if let Some(c) = Expr::fold(BinOp::Div, &a, &b) {
            return c;
        }
        if b.is_one() {
            return a;
        }
        if a.is_zero() && !b.is_zero() {
            return Expr::zero();
        }
        Expr::raw(BinOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        if let Some(c) = Expr::fold(BinOp::Pow, &a, &b) {
            return c;
        }
        if b.is_zero() {
            return Expr::one();
        }
        if b.is_one() {
            return a;
        }
        Expr::raw(BinOp::Pow, a, b)
    }

    pub fn powf(self, exponent: f64) -> Expr {
        Expr::pow(self, Expr::constant(exponent))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr(Arc::new(Node::Neg(self))),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        if let Some(x) = a.as_const() {
            if let Ok(v) = eval::apply_func(f, x) {
                if v.is_finite() {
                    return Expr::constant(v);
                }
            }
        }
        Expr(Arc::new(Node::Call(f, a)))
    }

    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }

    pub fn log(self) -> Expr {
        Expr::call(Func::Log, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }

    pub fn abs(self) -> Expr {
        Expr::call(Func::Abs, self)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(self, f)
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::constant(value)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $ctor:ident) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(self, rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self.clone(), rhs.clone())
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$ctor(self, Expr::constant(rhs))
            }
        }
        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(Expr::constant(self), rhs)
            }
        }
    };
}

impl_binop!(Add, add, add);
impl_binop!(Sub, sub, sub);
impl_binop!(Mul, mul, mul);
impl_binop!(Div, div, div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
