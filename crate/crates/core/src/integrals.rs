//! Radial quadrature: slice fluxes, decay scans with a power-law tail fit,
//! truncated divergence bookkeeping and the mass integral.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::chart::End;
use crate::cohomog1::{Cohomog1Metric, RadialFunction};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Largest scan radius, and the cut for improper integrals.
    pub r_max: f64,
    pub tail_points: usize,
    pub scan_points: usize,
    /// `decay_holds` means the fitted limit is at most this.
    pub decay_tol: f64,
    /// Relative fit residual above which a scan is inconclusive.
    pub fit_threshold: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            rel_tol: 1e-9,
            abs_tol: 1e-14,
            max_panels: 1 << 20,
            r_max: 1000.0,
            tail_points: 8,
            scan_points: 24,
            decay_tol: 1e-6,
            fit_threshold: 1e-2,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("quadrature tolerances must be positive");
        }
        if self.tail_points < 4 || self.scan_points < self.tail_points {
            return bad("need at least 4 tail points and no more tail points than scan points");
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return bad("r_max must be positive and finite");
        }
        if self.max_panels < 16 {
            return bad("max_panels must be at least 16");
        }
        Ok(())
    }
}

struct Simpson<'a, F> {
    f: &'a F,
    panels: usize,
    max_panels: usize,
}

impl<F: Fn(f64) -> Result<f64>> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = ((self.f)(lm)?, (self.f)(rm)?);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        self.panels += 1;
        if delta.abs() <= 15.0 * tol || depth == 0 {
            if depth == 0 && delta.abs() > 15.0 * tol {
                return Err(Error::Quadrature(format!("no convergence on [{a}, {b}]")));
            }
            return Ok(left + right + delta / 15.0);
        }
        if self.panels > self.max_panels {
            return Err(Error::Quadrature(format!("panel budget {} exhausted", self.max_panels)));
        }
        let l = self.refine(a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?;
        let r = self.refine(m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?;
        Ok(l + r)
    }
}

/// Adaptive Simpson with Richardson correction on a finite interval.
pub fn integrate<F: Fn(f64) -> Result<f64>>(f: F, a: f64, b: f64, settings: &QuadratureSettings) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature("finite limits required".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    const START: usize = 32;
    let h = (b - a) / START as f64;
    let xs: Vec<f64> = (0..=2 * START).map(|k| a + 0.5 * h * k as f64).collect();
    let fs = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let mut panels = Vec::with_capacity(START);
    let mut magnitude = 0.0;
    for k in 0..START {
        let (fa, fm, fb) = (fs[2 * k], fs[2 * k + 1], fs[2 * k + 2]);
        let whole = h / 6.0 * (fa + 4.0 * fm + fb);
        magnitude += h / 6.0 * (fa.abs() + 4.0 * fm.abs() + fb.abs());
        panels.push((xs[2 * k], xs[2 * k + 2], fa, fm, fb, whole));
    }
    let tol = settings.abs_tol.max(settings.rel_tol * magnitude) / START as f64;
    let mut s = Simpson { f: &f, panels: 0, max_panels: settings.max_panels };
    let mut parts = Vec::with_capacity(START);
    for (pa, pb, fa, fm, fb, whole) in panels {
        parts.push(s.refine(pa, pb, fa, fm, fb, whole, tol, 48)?);
    }
    Ok(pairwise_sum(&parts))
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// `∫_a^∞ f`: adaptive quadrature up to `r_max` plus a power-law tail
/// `f(r) ≈ c r^{−q}` fitted at `r_max/2` and `r_max`.
pub fn integrate_to_infinity<F: Fn(f64) -> Result<f64>>(f: F, a: f64, settings: &QuadratureSettings) -> Result<f64> {
    let big = settings.r_max;
    if !(a < big / 2.0) || a <= 0.0 {
        return Err(Error::Quadrature(format!("need 0 < a < r_max/2, got a = {a}")));
    }
    let body = integrate(&f, a, big, settings)?;
    let (f1, f2) = (f(big / 2.0)?, f(big)?);
    if f1 == 0.0 && f2 == 0.0 {
        return Ok(body);
    }
    if f1 * f2 <= 0.0 {
        return Err(Error::Quadrature("integrand changes sign in the tail".into()));
    }
    let q = (f1 / f2).ln() / std::f64::consts::LN_2;
    if q <= 1.0 {
        return Err(Error::Quadrature(format!("tail decays like r^-{q:.3}, not integrable")));
    }
    Ok(body + f2 * big / (q - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxWeight {
    /// `S = Ric + (H²/(n−1)) g`
    S,
    /// `Ric + (n−1) g`
    RicPlusLambda,
}

impl Cohomog1Metric {
    /// Slice coordinate reached at scan radius `r`: `r` when the free end is
    /// above the boundary, `−r` when it is below.
    pub fn slice_at(&self, r: f64) -> f64 {
        match self.boundary() {
            End::Lower => r,
            End::Upper => -r,
        }
    }

    /// +1 if moving away from the boundary increases the coordinate.
    fn away(&self) -> f64 {
        -self.boundary().sign()
    }
}

fn weight_coeff(metric: &Cohomog1Metric, mean_curvature: f64, weight: FluxWeight) -> f64 {
    let n1 = metric.dim() as f64 - 1.0;
    match weight {
        FluxWeight::S => mean_curvature * mean_curvature / n1,
        FluxWeight::RicPlusLambda => n1,
    }
}

/// `∫ T(DV, ν) dσ` over the slice at coordinate `s`, with `ν` pointing away
/// from the boundary and `T` the chosen weight.
pub fn flux_integral(
    metric: &Cohomog1Metric,
    v: &RadialFunction,
    mean_curvature: f64,
    s: f64,
    weight: FluxWeight,
) -> Result<f64> {
    let t = metric.shifted_ricci(s, weight_coeff(metric, mean_curvature, weight))?.tt;
    let (_, vp, _) = metric.radial_jet(v, s)?;
    Ok(metric.away() * vp * t * metric.slice_area(s)?)
}

/// Power-law tail model `F(r) ≈ c0 + c1 r^{−p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailFit {
    pub c0: f64,
    pub c1: f64,
    /// `None` when the tail is flat to rounding.
    pub p: Option<f64>,
    /// RMS misfit relative to the variation the model explains.
    pub residual: f64,
}

/// Fit the last `k` samples. The exponent comes from a log-linear regression
/// of successive differences, then `c0, c1` from least squares.
pub fn fit_tail(r: &[f64], f: &[f64], k: usize) -> Result<TailFit> {
    if r.len() != f.len() || r.len() < k || k < 3 {
        return Err(Error::InvalidParameter("tail fit needs at least 3 matching samples".into()));
    }
    let (r, f) = (&r[r.len() - k..], &f[f.len() - k..]);
    let scale = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diffs: Vec<f64> = f.windows(2).map(|w| w[1] - w[0]).collect();
    let floor = 64.0 * f64::EPSILON * scale;
    if diffs.iter().all(|d| d.abs() <= floor) {
        let mean = f.iter().sum::<f64>() / k as f64;
        let spread = f.iter().fold(0.0f64, |m, x| m.max((x - mean).abs()));
        return Ok(TailFit { c0: mean, c1: 0.0, p: None, residual: spread / scale.max(f64::MIN_POSITIVE) });
    }
    let pts: Vec<(f64, f64)> = r
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| d.abs() > floor)
        .map(|(x, d)| (x.ln(), d.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::NonConvergentTail("too few resolvable differences".into()));
    }
    let p = -slope(&pts);
    let basis: Vec<f64> = r.iter().map(|x| x.powf(-p)).collect();
    let (c0, c1) = least_squares(&basis, f)?;
    let rms = (f
        .iter()
        .zip(&basis)
        .map(|(y, b)| (y - c0 - c1 * b).powi(2))
        .sum::<f64>()
        / k as f64)
        .sqrt();
    let explained = (c1 * (basis[0] - basis[k - 1])).abs();
    Ok(TailFit { c0, c1, p: Some(p), residual: rms / explained.max(floor).max(f64::MIN_POSITIVE) })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Least squares for `y ≈ a + b x`.
fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::NonConvergentTail("degenerate tail abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluxScan {
    pub weight: FluxWeight,
    pub mean_curvature: f64,
    /// Scan radii; the slice coordinate is `Cohomog1Metric::slice_at(r)`.
    pub r: Vec<f64>,
    pub flux: Vec<f64>,
    pub fit: TailFit,
    /// Fitted limit, `fit.c0`.
    pub limit: f64,
    pub raw_min: f64,
    /// `None` when the fit is too poor to decide.
    pub decay_holds: Option<bool>,
}

impl FluxScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,flux\n");
        for (r, f) in self.r.iter().zip(&self.flux) {
            let _ = writeln!(out, "{r:.16e},{f:.16e}");
        }
        out
    }
}

pub fn flux_scan(
    metric: &Cohomog1Metric,
    v: &RadialFunction,
    mean_curvature: f64,
    weight: FluxWeight,
    settings: &QuadratureSettings,
) -> Result<FluxScan> {
    settings.validate()?;
    if metric.far_end().is_none() {
        return Err(Error::BoundedDomain);
    }
    let r0 = (2.0 * metric.boundary_value().abs()).max(2.0);
    if !(settings.r_max > 2.0 * r0) {
        return Err(Error::InvalidParameter(format!("r_max must exceed {}", 2.0 * r0)));
    }
    let k = settings.scan_points;
    let ratio = (settings.r_max / r0).powf(1.0 / (k - 1) as f64);
    let r: Vec<f64> = (0..k)
        .map(|i| if i + 1 == k { settings.r_max } else { r0 * ratio.powi(i as i32) })
        .collect();
    let flux = r
        .iter()
        .map(|&x| flux_integral(metric, v, mean_curvature, metric.slice_at(x), weight))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_tail(&r, &flux, settings.tail_points)?;
    let raw_min = flux.iter().copied().fold(f64::INFINITY, f64::min);
    let conclusive = fit.residual <= settings.fit_threshold && fit.p.is_none_or(|p| p > 0.0);
    Ok(FluxScan {
        weight,
        mean_curvature,
        r,
        flux,
        limit: fit.c0,
        fit,
        raw_min,
        decay_holds: conclusive.then_some(fit.c0 <= settings.decay_tol),
    })
}

/// Scan of `∫ S(DV, ν)` toward the free end.
pub fn decay_liminf(
    metric: &Cohomog1Metric,
    v: &RadialFunction,
    mean_curvature: f64,
    settings: &QuadratureSettings,
) -> Result<FluxScan> {
    flux_scan(metric, v, mean_curvature, FluxWeight::S, settings)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncatedIdentity {
    pub lhs_volume: f64,
    pub inner_flux: f64,
    pub outer_flux: f64,
    pub pinching_volume_term: f64,
    pub residual: f64,
    /// `residual` over the largest term, 0 when every term vanishes.
    pub relative_residual: f64,
}

fn scalar_constant(metric: &Cohomog1Metric, a: f64, b: f64) -> Result<f64> {
    let vals = (0..=8)
        .map(|k| Ok(metric.shifted_ricci(a + (b - a) * k as f64 / 8.0, 0.0)?.scalar))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    if hi - lo > 1e-8 {
        return Err(Error::NonConstantScalarCurvature(format!("R varies by {:e}", hi - lo)));
    }
    Ok(vals[0])
}

/// `∫ f dμ` over the region between slices `a < b`.
pub fn volume_integral<F: Fn(f64) -> Result<f64>>(
    metric: &Cohomog1Metric,
    f: F,
    a: f64,
    b: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    integrate(|s| Ok(f(s)? * metric.lapse_at(s)? * metric.slice_area(s)?), a, b, settings)
}

/// Divergence-theorem bookkeeping for `div(S(DV,·))` between the boundary
/// and the slice at scan radius `r`.
pub fn truncated_identity(
    metric: &Cohomog1Metric,
    v: &RadialFunction,
    mean_curvature: f64,
    r: f64,
    settings: &QuadratureSettings,
) -> Result<TruncatedIdentity> {
    settings.validate()?;
    let face = metric.boundary_value();
    let outer = metric.slice_at(r);
    metric.check_s(outer)?;
    let (a, b) = if face < outer { (face, outer) } else { (outer, face) };
    if a == b {
        return Err(Error::InvalidParameter("truncation slice coincides with the boundary".into()));
    }
    let n = metric.dim() as f64;
    let n1 = n - 1.0;
    let scalar = scalar_constant(metric, a, b)?;
    let w = mean_curvature * mean_curvature / n1;
    let lhs_volume = volume_integral(
        metric,
        |s| {
            let sr = metric.shifted_ricci(s, w)?;
            let (val, _, _) = metric.radial_jet(v, s)?;
            Ok(val * (sr.tt * sr.tt + n1 * sr.tan * sr.tan))
        },
        a,
        b,
        settings,
    )?;
    let int_v = volume_integral(metric, |s| Ok(metric.radial_jet(v, s)?.0), a, b, settings)?;
    let inner_flux = -flux_integral(metric, v, mean_curvature, face, FluxWeight::S)?;
    let outer_flux = flux_integral(metric, v, mean_curvature, outer, FluxWeight::S)?;
    let pinching_volume_term = (scalar + mean_curvature * mean_curvature) / n1 * (scalar + n * w) * int_v;
    let residual = (lhs_volume - inner_flux - outer_flux - pinching_volume_term).abs();
    let biggest = [lhs_volume, inner_flux, outer_flux, pinching_volume_term]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(TruncatedIdentity {
        lhs_volume,
        inner_flux,
        outer_flux,
        pinching_volume_term,
        residual,
        relative_residual: if biggest > 0.0 { residual / biggest } else { 0.0 },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassReport {
    /// Fitted limit of `∫ (Ric + (n−1)g)(DV, ν)`.
    pub limit: f64,
    pub mass: f64,
    pub scan: FluxScan,
}

/// `m(g, V) = −2/(n−2) · lim ∫ (Ric + (n−1)g)(DV, ν) dσ`.
pub fn wch_mass(metric: &Cohomog1Metric, v: &RadialFunction, settings: &QuadratureSettings) -> Result<MassReport> {
    if metric.dim() < 3 {
        return Err(Error::InvalidParameter("mass needs dimension at least 3".into()));
    }
    let scan = flux_scan(metric, v, 0.0, FluxWeight::RicPlusLambda, settings)?;
    if scan.decay_holds.is_none() {
        return Err(Error::NonConvergentTail(format!("fit residual {:e}", scan.fit.residual)));
    }
    let limit = scan.limit;
    Ok(MassReport { limit, mass: -2.0 / (metric.dim() as f64 - 2.0) * limit, scan })
}

/// `div(φ e_t) = φ' + (n−1)(B'/B) φ` for the unit radial field `e_t`.
pub fn radial_divergence(metric: &Cohomog1Metric, phi: &RadialFunction, s: f64) -> Result<f64> {
    let (f, fp, _) = metric.warp_jet(s)?;
    let (val, d1, _) = metric.radial_jet(phi, s)?;
    Ok(d1 + (metric.dim() as f64 - 1.0) * fp / f * val)
}

/// Flux of `φ e_t` through the slice at `s`, in the `e_t` direction.
pub fn radial_slice_flux(metric: &Cohomog1Metric, phi: &RadialFunction, s: f64) -> Result<f64> {
    Ok(metric.radial_jet(phi, s)?.0 * metric.slice_area(s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Interval;
    use crate::expr::{parse, Expr};
    use std::f64::consts::PI;

    fn kottler4() -> (Cohomog1Metric, RadialFunction) {
        let g = Cohomog1Metric::new(
            4,
            "r",
            parse("(r^2 + 1 - 2/r^2)^(-0.5)").unwrap(),
            Expr::var("r"),
            2.0,
            2.0 * PI * PI,
            false,
            Interval::new(2f64.sqrt(), f64::INFINITY),
            End::Lower,
        )
        .unwrap();
        let v = g.radial(parse("sqrt(r^2 + 1 - 2/r^2)").unwrap()).unwrap();
        (g, v)
    }

    #[test]
    fn simpson_polynomial_and_power_laws() {
        let s = QuadratureSettings::default();
        let v = integrate(|x| Ok(x * x), 0.0, 3.0, &s).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let v = integrate_to_infinity(|x| Ok(x.powi(-2)), 1.0, &s).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        let v = integrate_to_infinity(|x| Ok(x.powf(-3.5)), 1.0, &s).unwrap();
        assert!((v - 0.4).abs() < 0.4e-9);
    }

    #[test]
    fn kottler_flux_closed_form() {
        let (g, v) = kottler4();
        let vol = 2.0 * PI * PI;
        for r in [2.0, 5.0, 10.0, 100.0] {
            let f = flux_integral(&g, &v, -3.0, r, FluxWeight::S).unwrap();
            let want = -6.0 * (1.0 + 2.0 * r.powi(-4)) * vol;
            assert!((f / want - 1.0).abs() < 1e-12, "r={r}: {f} vs {want}");
        }
    }

    #[test]
    fn kottler_decay_limit() {
        let (g, v) = kottler4();
        let scan = decay_liminf(&g, &v, -3.0, &QuadratureSettings::default()).unwrap();
        let want = -12.0 * PI * PI;
        assert!((scan.limit / want - 1.0).abs() < 1e-6, "{:?}", scan.fit);
        assert!((scan.fit.p.unwrap() - 4.0).abs() < 0.1);
        assert_eq!(scan.decay_holds, Some(true));
        assert!(scan.to_csv().starts_with("r,flux\n"));
    }

    #[test]
    fn kottler_truncated_identity() {
        let (g, v) = kottler4();
        let vol = 2.0 * PI * PI;
        let t = truncated_identity(&g, &v, -3.0, 10.0, &QuadratureSettings::default()).unwrap();
        assert!((t.inner_flux - 9.0 * vol).abs() < 1e-9 * vol);
        assert_eq!(t.pinching_volume_term, 0.0);
        assert!(t.relative_residual < 1e-6, "{t:?}");
    }

    #[test]
    fn kottler_mass() {
        let (g, v) = kottler4();
        let m = wch_mass(&g, &v, &QuadratureSettings::default()).unwrap();
        assert!((m.mass / (12.0 * PI * PI) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn compact_domain_has_no_decay() {
        let g = Cohomog1Metric::new(
            3,
            "r",
            Expr::one(),
            Expr::var("r"),
            1.0,
            1.0,
            false,
            Interval::new(0.1, 1.0),
            End::Upper,
        )
        .unwrap();
        let v = g.radial(Expr::one()).unwrap();
        assert!(matches!(
            decay_liminf(&g, &v, 2.0, &QuadratureSettings::default()),
            Err(Error::BoundedDomain)
        ));
    }
}
