use super::{BinOp, Expr, Func, Node};

impl Expr {
    /// Exact partial derivative with respect to `var`.
    ///
    /// Powers whose exponent does not depend on `var` use the plain power
    /// rule, so `r^(2-n)` differentiates without touching `log(r)`.
    pub fn differentiate(&self, var: &str) -> Expr {
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(name) => {
                if &**name == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Neg(a) => a.differentiate(var).neg(),
            Node::Binary(op, a, b) => {
                let da = a.differentiate(var);
                let db = b.differentiate(var);
                match op {
                    BinOp::Add => da + db,
                    BinOp::Sub => da - db,
                    BinOp::Mul => Expr::add(da * b.clone(), a.clone() * db),
                    BinOp::Div => {
                        // a'/b - a b'/b^2
                        let first = Expr::div(da, b.clone());
                        if db.is_zero() {
                            first
                        } else {
                            first - Expr::div(a.clone() * db, b.clone().powf(2.0))
                        }
                    }
                    BinOp::Pow => {
                        if db.is_zero() {
                            let lowered = Expr::pow(a.clone(), b.clone() - 1.0);
                            b.clone() * lowered * da
                        } else {
                            // a^b (b' log a + b a'/a)
                            let log_part = db * a.clone().log();
                            let base_part = Expr::div(b.clone() * da, a.clone());
                            self.clone() * (log_part + base_part)
                        }
                    }
                }
            }
            Node::Call(f, a) => {
                let da = a.differentiate(var);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Log => Expr::div(Expr::one(), a.clone()),
                    Func::Sqrt => Expr::div(Expr::constant(0.5), self.clone()),
                    Func::Sin => a.clone().cos(),
                    Func::Cos => a.clone().sin().neg(),
                    Func::Abs => Expr::call(Func::Sign, a.clone()),
                    Func::Sign => Expr::zero(),
                };
                outer * da
            }
        }
    }

    /// Repeated differentiation along the listed variables, left to right.
    pub fn differentiate_many<'a>(&self, vars: impl IntoIterator<Item = &'a str>) -> Expr {
        vars.into_iter()
            .fold(self.clone(), |e, v| e.differentiate(v))
    }
}
