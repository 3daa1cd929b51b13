//! First-order jets: a value together with its coordinate gradient.
//!
//! The curvature pipeline is written once over [`Field`] and evaluated either
//! on plain `f64` (values) or on [`Jet`] (values plus exact first partials).
//! Jet inputs are seeded from the symbolic derivative trees, so no step size
//! is involved anywhere.

use std::ops::{Add, Mul, Neg, Sub};

pub(crate) trait Field:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
{
    fn zero_like(&self) -> Self;
}

impl Field for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Jet {
    pub v: f64,
    pub d: Vec<f64>,
}

impl Jet {
    pub fn new(v: f64, d: Vec<f64>) -> Self {
        Jet { v, d }
    }
}

impl Field for Jet {
    fn zero_like(&self) -> Self {
        Jet { v: 0.0, d: vec![0.0; self.d.len()] }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self.v += rhs.v;
        for (a, b) in self.d.iter_mut().zip(&rhs.d) {
            *a += b;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        self.v -= rhs.v;
        for (a, b) in self.d.iter_mut().zip(&rhs.d) {
            *a -= b;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Jet) -> Jet {
        let d = self
            .d
            .iter()
            .zip(&rhs.d)
            .map(|(a, b)| a * rhs.v + self.v * b)
            .collect();
        Jet { v: self.v * rhs.v, d }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, s: f64) -> Jet {
        self.v *= s;
        for a in &mut self.d {
            *a *= s;
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}
