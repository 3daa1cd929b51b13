use std::collections::BTreeMap;

use thiserror::Error;

use super::{BinOp, Expr, Func, Node};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("{op} is undefined at {arg}")]
    Domain { op: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
}

/// Variable lookup used during evaluation.
pub trait Env {
    fn lookup(&self, name: &str) -> Option<f64>;
}

/// Named variable bindings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VarEnv(BTreeMap<String, f64>);

impl VarEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }
}

impl<const N: usize> From<[(&str, f64); N]> for VarEnv {
    fn from(pairs: [(&str, f64); N]) -> Self {
        VarEnv(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Env for VarEnv {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

/// Positional bindings for chart coordinates.
#[derive(Clone, Copy, Debug)]
pub struct CoordEnv<'a> {
    pub names: &'a [String],
    pub values: &'a [f64],
}

impl Env for CoordEnv<'_> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

fn as_small_int(y: f64) -> Option<i32> {
    (y.fract() == 0.0 && y.abs() <= i32::MAX as f64).then_some(y as i32)
}

pub(crate) fn apply_binary(op: BinOp, x: f64, y: f64) -> Result<f64, EvalError> {
    Ok(match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => {
            if y == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            x / y
        }
        BinOp::Pow => match as_small_int(y) {
            Some(k) => {
                if x == 0.0 && k < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                x.powi(k)
            }
            None => {
                if x <= 0.0 {
                    return Err(EvalError::Domain { op: "non-integer power", arg: x });
                }
                x.powf(y)
            }
        },
    })
}

pub(crate) fn apply_func(f: Func, x: f64) -> Result<f64, EvalError> {
    Ok(match f {
        Func::Exp => x.exp(),
        Func::Log => {
            if x <= 0.0 {
                return Err(EvalError::Domain { op: "log", arg: x });
            }
            x.ln()
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err(EvalError::Domain { op: "sqrt", arg: x });
            }
            x.sqrt()
        }
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Abs => x.abs(),
        Func::Sign => {
            if x == 0.0 {
                return Err(EvalError::Domain { op: "sign", arg: x });
            }
            x.signum()
        }
    })
}

impl Expr {
    pub fn evaluate(&self, env: &impl Env) -> Result<f64, EvalError> {
        match self.node() {
            Node::Const(c) => Ok(*c),
            Node::Var(name) => env
                .lookup(name)
                .ok_or_else(|| EvalError::UnboundVariable(name.to_string())),
            Node::Neg(a) => Ok(-a.evaluate(env)?),
            Node::Call(f, a) => apply_func(*f, a.evaluate(env)?),
            Node::Binary(op, a, b) => apply_binary(*op, a.evaluate(env)?, b.evaluate(env)?),
        }
    }
}
