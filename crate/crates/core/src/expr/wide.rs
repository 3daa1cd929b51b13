//! 128-bit evaluation of expression trees, for quantities that are small
//! differences of order-one terms.

use std::cell::RefCell;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use super::eval::{Env, EvalError};
use super::{BinOp, Expr, Func, Node};

const BITS: usize = 128;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache allocation"));
}

/// A real number carried with 128 mantissa bits.
#[derive(Clone, Debug)]
pub struct Wide(BigFloat);

impl Wide {
    pub fn from_f64(x: f64) -> Wide {
        Wide(BigFloat::from_f64(x, BITS))
    }

    pub fn to_f64(&self) -> f64 {
        let b = &self.0;
        if b.is_nan() {
            return f64::NAN;
        }
        if b.is_inf_pos() {
            return f64::INFINITY;
        }
        if b.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        let Some((words, _, sign, exp, _)) = b.as_raw_parts() else {
            return 0.0;
        };
        // Mantissa is normalized to [1/2, 1); the last word is the most significant.
        let mut m = 0.0;
        let mut scale = 1.0;
        for w in words.iter().rev().take(2) {
            scale *= 2f64.powi(-64);
            m += *w as f64 * scale;
        }
        let v = m * 2f64.powi(exp);
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        !self.0.is_zero() && self.0.is_positive()
    }

    fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
        CONSTS.with(|c| f(&mut c.borrow_mut()))
    }

    pub fn add(&self, o: &Wide) -> Wide {
        Wide(self.0.add(&o.0, BITS, RM))
    }

    pub fn sub(&self, o: &Wide) -> Wide {
        Wide(self.0.sub(&o.0, BITS, RM))
    }

    pub fn mul(&self, o: &Wide) -> Wide {
        Wide(self.0.mul(&o.0, BITS, RM))
    }

    pub fn div(&self, o: &Wide) -> Wide {
        Wide(self.0.div(&o.0, BITS, RM))
    }

    pub fn neg(&self) -> Wide {
        Wide(self.0.neg())
    }

    fn powi(&self, k: i32) -> Wide {
        let p = Wide(self.0.powi(k.unsigned_abs() as usize, BITS, RM));
        if k < 0 {
            Wide(p.0.reciprocal(BITS, RM))
        } else {
            p
        }
    }

    fn powf(&self, y: &Wide) -> Wide {
        Wide(Self::with_consts(|cc| self.0.pow(&y.0, BITS, RM, cc)))
    }

    fn call(&self, f: Func) -> Wide {
        Wide(match f {
            Func::Exp => Self::with_consts(|cc| self.0.exp(BITS, RM, cc)),
            Func::Log => Self::with_consts(|cc| self.0.ln(BITS, RM, cc)),
            Func::Sqrt => self.0.sqrt(BITS, RM),
            Func::Sin => Self::with_consts(|cc| self.0.sin(BITS, RM, cc)),
            Func::Cos => Self::with_consts(|cc| self.0.cos(BITS, RM, cc)),
            Func::Abs => self.0.abs(),
            Func::Sign => BigFloat::from_f64(if self.is_positive() { 1.0 } else { -1.0 }, BITS),
        })
    }
}

fn small_int(y: f64) -> Option<i32> {
    (y.fract() == 0.0 && y.abs() <= i32::MAX as f64).then_some(y as i32)
}

impl Expr {
    /// Like [`Expr::evaluate`], with 128-bit intermediates. Domain errors
    /// match the `f64` evaluator.
    pub fn evaluate_wide(&self, env: &impl Env) -> Result<Wide, EvalError> {
        match self.node() {
            Node::Const(c) => Ok(Wide::from_f64(*c)),
            Node::Var(name) => env
                .lookup(name)
                .map(Wide::from_f64)
                .ok_or_else(|| EvalError::UnboundVariable(name.to_string())),
            Node::Neg(a) => Ok(a.evaluate_wide(env)?.neg()),
            Node::Call(f, a) => {
                let x = a.evaluate_wide(env)?;
                let bad = |op| Err(EvalError::Domain { op, arg: x.to_f64() });
                match f {
                    Func::Log if !x.is_positive() => bad("log"),
                    Func::Sqrt if !x.is_zero() && !x.is_positive() => bad("sqrt"),
                    Func::Sign if x.is_zero() => bad("sign"),
                    _ => Ok(x.call(*f)),
                }
            }
            Node::Binary(op, a, b) => {
                let x = a.evaluate_wide(env)?;
                Ok(match op {
                    BinOp::Add => x.add(&b.evaluate_wide(env)?),
                    BinOp::Sub => x.sub(&b.evaluate_wide(env)?),
                    BinOp::Mul => x.mul(&b.evaluate_wide(env)?),
                    BinOp::Div => {
                        let y = b.evaluate_wide(env)?;
                        if y.is_zero() {
                            return Err(EvalError::DivisionByZero);
                        }
                        x.div(&y)
                    }
                    BinOp::Pow => {
                        let y = b.evaluate_wide(env)?;
                        match small_int(y.to_f64()).filter(|_| y.0.is_int()) {
                            Some(k) => {
                                if x.is_zero() && k < 0 {
                                    return Err(EvalError::DivisionByZero);
                                }
                                x.powi(k)
                            }
                            None => {
                                if !x.is_positive() {
                                    return Err(EvalError::Domain { op: "non-integer power", arg: x.to_f64() });
                                }
                                x.powf(&y)
                            }
                        }
                    }
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, VarEnv};

    #[test]
    fn round_trips_f64() {
        for x in [0.0, 1.0, -2.5, 1e-300, 3.7e200, std::f64::consts::PI, -1.0 / 3.0] {
            assert_eq!(Wide::from_f64(x).to_f64(), x);
        }
    }

    #[test]
    fn resolves_cancellation() {
        // (1 + 1e-20) − 1 is lost in f64 but not here.
        let e = parse("(1 + x) - 1").unwrap();
        let v = e.evaluate_wide(&VarEnv::from([("x", 1e-20)])).unwrap().to_f64();
        assert!((v / 1e-20 - 1.0).abs() < 1e-15);
        let e = parse("exp(log(x)) - x + sqrt(x)^2 - x").unwrap();
        let v = e.evaluate_wide(&VarEnv::from([("x", 7.3)])).unwrap().to_f64();
        assert!(v.abs() < 1e-30);
    }

    #[test]
    fn agrees_with_f64_evaluator() {
        let e = parse("(r^2 + 1 - 2/r^2)^(-0.5) * sin(r) + cos(r)^3 / abs(r - 5)").unwrap();
        for r in [1.5, 2.0, 7.25] {
            let env = VarEnv::from([("r", r)]);
            let a = e.evaluate(&env).unwrap();
            let b = e.evaluate_wide(&env).unwrap().to_f64();
            assert!((a - b).abs() < 1e-14 * (1.0 + a.abs()));
        }
        let bad = parse("x^0.5").unwrap();
        assert!(bad.evaluate_wide(&VarEnv::from([("x", -1.0)])).is_err());
        assert_eq!(parse("x^(-3)").unwrap().evaluate_wide(&VarEnv::from([("x", -2.0)])).unwrap().to_f64(), -0.125);
    }
}
