//! Warped metrics `g = A(s)² ds² + B(s)² b` over an Einstein fiber `(Σ, b)`.
//!
//! Quantities are reported as coefficients on unit vectors: `*_tt` along the
//! radial unit vector `e_t = A⁻¹ ∂_s`, `*_tan` along any unit fiber direction.
//! Primes denote arclength derivatives `f' = A⁻¹ df/ds`.

use serde::Serialize;

use crate::chart::{BoundaryFace, ChartMetric, End, Interval};
use crate::error::{Error, Result};
use crate::expr::{Expr, VarEnv, Wide};

/// Number of interior points used to check `A, B > 0`.
const POSITIVITY_SAMPLES: usize = 64;

#[derive(Clone, Debug)]
pub struct Cohomog1Metric {
    n: usize,
    coord: String,
    lapse: Expr,
    warp: Expr,
    kappa: f64,
    fiber_volume: f64,
    fiber_flat: bool,
    domain: Interval,
    boundary: End,
    warp_d1: Expr,
    warp_d2: Expr,
}

/// Radial function with its first two arclength derivatives.
#[derive(Clone, Debug)]
pub struct RadialFunction {
    value: Expr,
    d1: Expr,
    d2: Expr,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialCurvature {
    pub ric_tt: f64,
    pub ric_tan: f64,
    pub scalar: f64,
}

/// Ricci coefficients shifted by a multiple of the metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShiftedRicci {
    /// `Ric_tt + w`
    pub tt: f64,
    /// `Ric_tan + w`
    pub tan: f64,
    pub scalar: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialHessian {
    pub hess_tt: f64,
    pub hess_tan: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialOdeSolution {
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    /// Arclength derivative of `v`.
    pub dv: Vec<f64>,
    /// `max |(f'/f) V' − (Ric_tan − R/(n−1)) V|` over the grid.
    pub tangential_residual: f64,
    /// Richardson estimate of the global error in `v`.
    pub error_estimate: f64,
    pub steps: usize,
}

impl RadialFunction {
    pub fn value(&self, s: f64, coord: &str) -> Result<f64> {
        Ok(self.value.evaluate(&VarEnv::new().with(coord, s))?)
    }

    pub fn expr(&self) -> &Expr {
        &self.value
    }
}

impl Cohomog1Metric {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        coord: &str,
        lapse: Expr,
        warp: Expr,
        kappa: f64,
        fiber_volume: f64,
        fiber_flat: bool,
        domain: Interval,
        boundary: End,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMetric("dimension must be at least 2".into()));
        }
        if fiber_flat && kappa != 0.0 {
            return Err(Error::InvalidMetric("a flat fiber must have kappa = 0".into()));
        }
        if n == 2 && kappa != 0.0 {
            return Err(Error::InvalidMetric("a one-dimensional fiber has kappa = 0".into()));
        }
        if !(fiber_volume > 0.0) || !fiber_volume.is_finite() {
            return Err(Error::InvalidMetric("fiber volume must be positive".into()));
        }
        if !(domain.lo < domain.hi) {
            return Err(Error::InvalidMetric("empty radial domain".into()));
        }
        let face = match boundary {
            End::Lower => domain.lo,
            End::Upper => domain.hi,
        };
        if !face.is_finite() {
            return Err(Error::InvalidMetric("boundary must sit at a finite end".into()));
        }
        for (what, e) in [("lapse", &lapse), ("warp", &warp)] {
            if let Some(v) = e.free_vars().into_iter().find(|v| v != coord) {
                return Err(Error::InvalidMetric(format!("{what} uses unbound variable `{v}`")));
            }
        }
        let warp_d1 = Expr::div(warp.differentiate(coord), lapse.clone());
        let warp_d2 = Expr::div(warp_d1.differentiate(coord), lapse.clone());
        let metric = Cohomog1Metric {
            n,
            coord: coord.to_string(),
            lapse,
            warp,
            kappa,
            fiber_volume,
            fiber_flat,
            domain,
            boundary,
            warp_d1,
            warp_d2,
        };
        metric.check_positivity()?;
        Ok(metric)
    }

    fn check_positivity(&self) -> Result<()> {
        let iv = self.domain.truncated(self.far_default());
        for k in 1..POSITIVITY_SAMPLES {
            let s = iv.lo + (iv.hi - iv.lo) * k as f64 / POSITIVITY_SAMPLES as f64;
            let env = self.env(s);
            let a = self.lapse.evaluate(&env)?;
            let b = self.warp.evaluate(&env)?;
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::InvalidMetric(format!(
                    "lapse and warp must be positive; got A = {a}, B = {b} at {} = {s}",
                    self.coord
                )));
            }
        }
        Ok(())
    }

    /// Where infinite ends are cut for sampling: ten units past the boundary.
    fn far_default(&self) -> f64 {
        self.boundary_value().abs() + 10.0
    }

    fn env(&self, s: f64) -> VarEnv {
        VarEnv::new().with(&self.coord, s)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn coord(&self) -> &str {
        &self.coord
    }

    pub fn lapse(&self) -> &Expr {
        &self.lapse
    }

    pub fn warp(&self) -> &Expr {
        &self.warp
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn fiber_volume(&self) -> f64 {
        self.fiber_volume
    }

    pub fn fiber_flat(&self) -> bool {
        self.fiber_flat
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn boundary(&self) -> End {
        self.boundary
    }

    pub fn boundary_value(&self) -> f64 {
        match self.boundary {
            End::Lower => self.domain.lo,
            End::Upper => self.domain.hi,
        }
    }

    /// The unbounded end, if any (the end opposite the boundary).
    pub fn far_end(&self) -> Option<End> {
        match self.boundary {
            End::Lower if self.domain.hi.is_infinite() => Some(End::Upper),
            End::Upper if self.domain.lo.is_infinite() => Some(End::Lower),
            _ => None,
        }
    }

    pub fn check_s(&self, s: f64) -> Result<()> {
        if !self.domain.contains(s) {
            return Err(Error::OutsideDomain { point: vec![s] });
        }
        Ok(())
    }

    /// Radial function with arclength derivatives precomputed.
    pub fn radial(&self, value: Expr) -> Result<RadialFunction> {
        if let Some(v) = value.free_vars().into_iter().find(|v| *v != self.coord) {
            return Err(Error::InvalidParameter(format!(
                "radial function uses `{v}`, expected only `{}`",
                self.coord
            )));
        }
        let d1 = Expr::div(value.differentiate(&self.coord), self.lapse.clone());
        let d2 = Expr::div(d1.differentiate(&self.coord), self.lapse.clone());
        Ok(RadialFunction { value, d1, d2 })
    }

    /// `(V, V', V'')` at `s`.
    pub fn radial_jet(&self, f: &RadialFunction, s: f64) -> Result<(f64, f64, f64)> {
        self.check_s(s)?;
        let env = self.env(s);
        Ok((f.value.evaluate(&env)?, f.d1.evaluate(&env)?, f.d2.evaluate(&env)?))
    }

    pub fn lapse_at(&self, s: f64) -> Result<f64> {
        Ok(self.lapse.evaluate(&self.env(s))?)
    }

    /// `(B, B', B'')` at `s`.
    pub fn warp_jet(&self, s: f64) -> Result<(f64, f64, f64)> {
        self.check_s(s)?;
        let env = self.env(s);
        let f = self.warp.evaluate(&env)?;
        if !(f > 0.0) {
            return Err(Error::InvalidMetric(format!("warp is not positive at {s}")));
        }
        Ok((f, self.warp_d1.evaluate(&env)?, self.warp_d2.evaluate(&env)?))
    }

    /// Area of the slice through `s`: `B^{n−1} Vol(Σ, b)`.
    pub fn slice_area(&self, s: f64) -> Result<f64> {
        self.check_s(s)?;
        let env = self.env(s);
        let mut f = self.warp.evaluate(&env)?;
        if !(f > 0.0) {
            // Tolerate underflow of a positive warp far down a cusp.
            if f == 0.0 && self.warp.evaluate_wide(&env)?.is_positive() {
                f = 0.0;
            } else {
                return Err(Error::InvalidMetric(format!("warp is not positive at {s}")));
            }
        }
        Ok(f.powi(self.n as i32 - 1) * self.fiber_volume)
    }

    /// Ricci coefficients and scalar curvature.
    pub fn curvature_radial(&self, s: f64) -> Result<RadialCurvature> {
        let (f, fp, fpp) = self.warp_jet(s)?;
        let n1 = self.n as f64 - 1.0;
        let ric_tt = -n1 * fpp / f;
        let ric_tan = self.kappa / (f * f) - fpp / f - (n1 - 1.0) * fp * fp / (f * f);
        Ok(RadialCurvature { ric_tt, ric_tan, scalar: ric_tt + n1 * ric_tan })
    }

    /// `Ric + w g` as radial and tangential coefficients. Everything is
    /// carried in 128-bit arithmetic and rounded once, so the result keeps
    /// its relative accuracy when `Ric ≈ −w g`.
    pub fn shifted_ricci(&self, s: f64, w: f64) -> Result<ShiftedRicci> {
        self.check_s(s)?;
        let env = self.env(s);
        let f = self.warp.evaluate_wide(&env)?;
        if !f.is_positive() {
            return Err(Error::InvalidMetric(format!("warp is not positive at {s}")));
        }
        let fp = self.warp_d1.evaluate_wide(&env)?;
        let fpp = self.warp_d2.evaluate_wide(&env)?;
        let n1 = Wide::from_f64(self.n as f64 - 1.0);
        let f2 = f.mul(&f);
        let ratio = fpp.div(&f);
        let tt = n1.mul(&ratio).neg();
        let tan = Wide::from_f64(self.kappa)
            .div(&f2)
            .sub(&ratio)
            .sub(&Wide::from_f64(self.n as f64 - 2.0).mul(&fp.mul(&fp)).div(&f2));
        let scalar = tt.add(&n1.mul(&tan));
        let w = Wide::from_f64(w);
        Ok(ShiftedRicci {
            tt: tt.add(&w).to_f64(),
            tan: tan.add(&w).to_f64(),
            scalar: scalar.to_f64(),
        })
    }

    pub fn hessian_radial(&self, v: &RadialFunction, s: f64) -> Result<RadialHessian> {
        let (f, fp, _) = self.warp_jet(s)?;
        let (_, vp, vpp) = self.radial_jet(v, s)?;
        Ok(RadialHessian { hess_tt: vpp, hess_tan: fp / f * vp })
    }

    pub fn laplacian_radial(&self, v: &RadialFunction, s: f64) -> Result<f64> {
        let h = self.hessian_radial(v, s)?;
        Ok(h.hess_tt + (self.n as f64 - 1.0) * h.hess_tan)
    }

    /// Integrate the radial part of `Hess V = (Ric − R/(n−1) g) V`, i.e.
    /// `V'' = (Ric_tt − R/(n−1)) V`, with classical RK4 at a fixed step of
    /// one 4096th of the grid span, and monitor the tangential component.
    ///
    /// `dv0` is the arclength derivative at `grid[0]`.
    pub fn solve_radial_static_ode(&self, v0: f64, dv0: f64, grid: &[f64]) -> Result<RadialOdeSolution> {
        if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("grid must be strictly increasing with ≥ 2 points".into()));
        }
        for &s in grid {
            self.check_s(s)?;
        }
        let scalars = grid
            .iter()
            .map(|&s| Ok(self.curvature_radial(s)?.scalar))
            .collect::<Result<Vec<_>>>()?;
        let (lo, hi) = scalars
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
        if hi - lo > 1e-8 {
            return Err(Error::NonConstantScalarCurvature(format!(
                "R varies by {:e} along the grid",
                hi - lo
            )));
        }
        let r = scalars[0];
        let span = grid[grid.len() - 1] - grid[0];
        let h = span / 4096.0;

        let coarse = self.rk4_march(v0, dv0, grid, h, r)?;
        let fine = self.rk4_march(v0, dv0, grid, h / 2.0, r)?;
        let error_estimate = coarse
            .0
            .iter()
            .zip(&fine.0)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / 15.0));
        let (v, dv, steps) = fine;

        let n1 = self.n as f64 - 1.0;
        let mut tangential_residual = 0.0f64;
        for (k, &s) in grid.iter().enumerate() {
            let (f, fp, _) = self.warp_jet(s)?;
            let c = self.curvature_radial(s)?;
            let res = (fp / f * dv[k] - (c.ric_tan - r / n1) * v[k]).abs();
            tangential_residual = tangential_residual.max(res);
        }
        Ok(RadialOdeSolution {
            s: grid.to_vec(),
            v,
            dv,
            tangential_residual,
            error_estimate,
            steps,
        })
    }

    fn rk4_march(
        &self,
        v0: f64,
        dv0: f64,
        grid: &[f64],
        h: f64,
        scalar: f64,
    ) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let n1 = self.n as f64 - 1.0;
        let rhs = |s: f64, v: f64, w: f64| -> Result<(f64, f64)> {
            let a = self.lapse_at(s)?;
            let c = self.curvature_radial(s)?;
            Ok((a * w, a * (c.ric_tt - scalar / n1) * v))
        };
        let mut v = vec![v0];
        let mut dv = vec![dv0];
        let (mut y, mut w) = (v0, dv0);
        let mut steps = 0;
        for seg in grid.windows(2) {
            let count = ((seg[1] - seg[0]) / h).ceil().max(1.0) as usize;
            let step = (seg[1] - seg[0]) / count as f64;
            for i in 0..count {
                let s = seg[0] + step * i as f64;
                let (k1y, k1w) = rhs(s, y, w)?;
                let (k2y, k2w) = rhs(s + step / 2.0, y + step / 2.0 * k1y, w + step / 2.0 * k1w)?;
                let (k3y, k3w) = rhs(s + step / 2.0, y + step / 2.0 * k2y, w + step / 2.0 * k2w)?;
                let (k4y, k4w) = rhs(s + step, y + step * k3y, w + step * k3w)?;
                y += step / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
                w += step / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
                steps += 1;
                if !(y.is_finite() && w.is_finite()) {
                    return Err(Error::StepFailure(format!("non-finite state at {s}")));
                }
            }
            v.push(y);
            dv.push(w);
        }
        Ok((v, dv, steps))
    }

    /// Sectional curvature of the fiber metric `b` used for chart realizations.
    fn fiber_curvature(&self) -> f64 {
        if self.n <= 2 {
            0.0
        } else {
            self.kappa / (self.n as f64 - 2.0)
        }
    }

    /// Realize the metric in a chart `(s, x_1, ..., x_{n−1})` where the fiber
    /// is the constant-curvature space form with Einstein constant `κ` in
    /// stereographic coordinates, `b = 4 (1 + K|x|²)⁻² δ` (`b = δ` when flat).
    /// The fiber coordinates cover a small cube around the origin.
    pub fn to_chart(&self) -> Result<ChartMetric> {
        let n = self.n;
        let k = self.fiber_curvature();
        let prefix = if self.coord.starts_with('x') { "y" } else { "x" };
        let fiber: Vec<String> = (1..n).map(|i| format!("{prefix}{i}")).collect();
        let half = if k == 0.0 {
            0.5
        } else {
            0.4f64.min(0.45 / (k.abs() * (n as f64 - 1.0)).sqrt())
        };
        let factor = if k == 0.0 {
            Expr::one()
        } else {
            let r2 = fiber
                .iter()
                .map(|x| Expr::var(x).powf(2.0))
                .reduce(Expr::add)
                .expect("fiber has at least one coordinate");
            Expr::div(Expr::constant(4.0), (1.0 + k * r2).powf(2.0))
        };
        let b2 = self.warp.clone().powf(2.0);
        let mut diag = vec![self.lapse.clone().powf(2.0)];
        diag.extend((1..n).map(|_| b2.clone() * factor.clone()));
        let mut coords = vec![self.coord.clone()];
        coords.extend(fiber);
        let mut domain = vec![self.domain];
        domain.extend((1..n).map(|_| Interval::new(-half, half)));
        ChartMetric::diagonal(
            coords,
            diag,
            domain,
            Some(BoundaryFace { coord: 0, end: self.boundary }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn kottler4() -> Cohomog1Metric {
        let u = parse("r^2 + 1 - 2/r^2").unwrap();
        Cohomog1Metric::new(
            4,
            "r",
            u.powf(-0.5),
            parse("r").unwrap(),
            2.0,
            2.0 * std::f64::consts::PI.powi(2),
            false,
            Interval::new(2f64.sqrt(), f64::INFINITY),
            End::Lower,
        )
        .unwrap()
    }

    fn cusp(n: usize, lambda: f64) -> Cohomog1Metric {
        Cohomog1Metric::new(
            n,
            "t",
            Expr::one(),
            (lambda * Expr::var("t")).exp(),
            0.0,
            1.0,
            true,
            Interval::new(f64::NEG_INFINITY, 0.0),
            End::Upper,
        )
        .unwrap()
    }

    #[test]
    fn kottler_radial_curvature_at_two() {
        // −(n−1)(1 + m(n−2)r^{−n}) and −((n−1) − m(n−2)r^{−n}) at n=4, m=1, r=2
        let c = kottler4().curvature_radial(2.0).unwrap();
        assert!((c.ric_tt + 3.375).abs() < 1e-13);
        assert!((c.ric_tan + 2.875).abs() < 1e-13);
        assert!((c.scalar + 12.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_ricci_keeps_small_differences() {
        let g = kottler4();
        for r in [10.0, 100.0, 1000.0] {
            let sr = g.shifted_ricci(r, 3.0).unwrap();
            let want_tt = -6.0 * r.powi(-4);
            let want_tan = 2.0 * r.powi(-4);
            assert!((sr.tt / want_tt - 1.0).abs() < 1e-12, "r={r}: {}", sr.tt);
            assert!((sr.tan / want_tan - 1.0).abs() < 1e-12);
            assert_eq!(sr.scalar, -12.0);
        }
    }

    #[test]
    fn cusp_is_einstein() {
        let g = cusp(3, 1.0);
        for t in [-3.0, -1.0, 0.0] {
            let c = g.curvature_radial(t).unwrap();
            assert!((c.ric_tt + 2.0).abs() < 1e-14);
            assert!((c.ric_tan + 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cylinder_is_flat() {
        let g = Cohomog1Metric::new(
            3,
            "t",
            Expr::one(),
            Expr::one(),
            0.0,
            1.0,
            true,
            Interval::new(0.0, f64::INFINITY),
            End::Lower,
        )
        .unwrap();
        let c = g.curvature_radial(1.3).unwrap();
        assert_eq!((c.ric_tt, c.ric_tan, c.scalar), (0.0, 0.0, 0.0));
        let v = g.radial(Expr::constant(2.0)).unwrap();
        let h = g.hessian_radial(&v, 0.7).unwrap();
        assert_eq!((h.hess_tt, h.hess_tan), (0.0, 0.0));
    }

    #[test]
    fn cusp_hessian_matches_robin_system() {
        let g = cusp(3, 1.0);
        let v = g.radial(parse("exp(t)").unwrap()).unwrap();
        let h = g.hessian_radial(&v, 0.0).unwrap();
        assert!((h.hess_tt - 1.0).abs() < 1e-15);
        assert!((h.hess_tan - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kottler_static_equation_residual() {
        let g = kottler4();
        let v = g.radial(parse("sqrt(r^2 + 1 - 2/r^2)").unwrap()).unwrap();
        for r in [2f64.sqrt(), 2.0, 5.0, 10.0] {
            let c = g.curvature_radial(r).unwrap();
            let h = g.hessian_radial(&v, r).unwrap();
            let val = v.value(r, "r").unwrap();
            let tt = h.hess_tt - (c.ric_tt - c.scalar / 3.0) * val;
            let tan = h.hess_tan - (c.ric_tan - c.scalar / 3.0) * val;
            assert!(tt.abs() < 1e-10 && tan.abs() < 1e-10, "r={r}: {tt} {tan}");
        }
    }

    #[test]
    fn ode_recovers_kottler_potential() {
        let g = kottler4();
        let v = g.radial(parse("sqrt(r^2 + 1 - 2/r^2)").unwrap()).unwrap();
        let (v0, dv0, _) = g.radial_jet(&v, 2.0).unwrap();
        let grid: Vec<f64> = (0..=16).map(|k| 2.0 + 0.5 * k as f64).collect();
        let sol = g.solve_radial_static_ode(v0, dv0, &grid).unwrap();
        for (s, got) in sol.s.iter().zip(&sol.v) {
            let want = v.value(*s, "r").unwrap();
            assert!((got - want).abs() < 1e-6, "r={s}: {got} vs {want}");
        }
        assert!(sol.tangential_residual < 1e-6);
    }

    #[test]
    fn ode_recovers_exponential_on_cusp() {
        let g = cusp(3, 1.0);
        let grid: Vec<f64> = (0..=10).map(|k| -5.0 + 0.5 * k as f64).collect();
        let sol = g.solve_radial_static_ode((-5f64).exp(), (-5f64).exp(), &grid).unwrap();
        for (t, got) in sol.s.iter().zip(&sol.v) {
            assert!((got - t.exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn ode_keeps_constant_on_cylinder() {
        let g = Cohomog1Metric::new(
            3,
            "t",
            Expr::one(),
            Expr::one(),
            0.0,
            1.0,
            true,
            Interval::new(0.0, 4.0),
            End::Lower,
        )
        .unwrap();
        let sol = g.solve_radial_static_ode(1.0, 0.0, &[0.0, 1.0, 4.0]).unwrap();
        assert!(sol.v.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn ode_rejects_nonconstant_scalar_curvature() {
        let g = Cohomog1Metric::new(
            3,
            "r",
            Expr::one(),
            parse("r + r^3").unwrap(),
            1.0,
            1.0,
            false,
            Interval::new(0.5, 2.0),
            End::Lower,
        )
        .unwrap();
        assert!(matches!(
            g.solve_radial_static_ode(1.0, 0.0, &[0.5, 1.0, 2.0]),
            Err(Error::NonConstantScalarCurvature(_))
        ));
    }

    #[test]
    fn rejects_inconsistent_fiber_data() {
        let r = || parse("r").unwrap();
        let dom = Interval::new(1.0, 2.0);
        assert!(Cohomog1Metric::new(3, "r", Expr::one(), r(), 1.0, 1.0, true, dom, End::Lower).is_err());
        assert!(Cohomog1Metric::new(3, "r", Expr::one(), r(), 1.0, -1.0, false, dom, End::Lower).is_err());
        assert!(Cohomog1Metric::new(3, "r", Expr::one(), parse("r - 1.5").unwrap(), 1.0, 1.0, false, dom, End::Lower).is_err());
    }
}
