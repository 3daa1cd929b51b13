//! Static operators: `L*u = −(Δu)g + Hess u − u Ric`, its boundary partner,
//! the tensor `S = Ric + (H²/(n−1))g` and the divergence identity for `V|S|²`.

use serde::{Deserialize, Serialize};

use crate::boundary::sff_from;
use crate::chart::{ChartMetric, Point, ScalarField};
use crate::curvature::{divergence_from, hessian_from, sym_from_full, Curvature};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::sampling::{face_points, interior_points, SamplePlan};
use crate::tensor::SymTensor2;

/// Default absolute tolerance for interior and boundary residuals.
pub const STATIC_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Positivity {
    /// Positive in the interior, possibly zero on the boundary.
    #[default]
    Interior,
    Everywhere,
}

#[derive(Clone, Debug)]
pub struct PotentialSpec {
    pub expr: Expr,
    pub positivity: Positivity,
}

impl PotentialSpec {
    pub fn new(expr: Expr) -> Self {
        PotentialSpec { expr, positivity: Positivity::Interior }
    }

    pub fn everywhere(mut self) -> Self {
        self.positivity = Positivity::Everywhere;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaticReport {
    /// Sup over interior samples of the operator norm of `L*V`.
    pub interior_residual: f64,
    /// Sup of `|ΔV + (R/(n−1))V|`.
    pub trace_residual: f64,
    /// Sup over face samples of the operator norm of `V_ν ĝ − V h`.
    pub admissibility_residual: f64,
    pub scalar_min: f64,
    pub scalar_max: f64,
    pub scalar_variation: f64,
    pub potential_min: f64,
    pub potential_max: f64,
    pub interior_samples: usize,
    pub boundary_samples: usize,
    pub tolerance: f64,
    pub is_static_potential: bool,
    pub is_admissible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhiStar {
    pub interior: SymTensor2,
    /// Tangential tensor `u_ν ĝ − u h`.
    pub boundary: SymTensor2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalIdentity {
    /// `V|S|²`
    pub lhs: f64,
    /// `div(S(DV,·))` from the exact divergence of the covector field.
    pub divergence_combined: f64,
    /// `⟨Hess V, S⟩ + (div S)(DV)`
    pub divergence_split: f64,
    /// `((R+H²)/(n−1)) (R + nH²/(n−1)) V`
    pub pinching: f64,
    pub residual: f64,
    pub split_residual: f64,
}

fn l_star_from(curv: &Curvature, hess: &SymTensor2, u: f64) -> SymTensor2 {
    let lap = hess.trace(curv.ginv());
    hess.axpy(-lap, &curv.metric()).axpy(-u, &curv.ricci)
}

pub fn l_star(metric: &ChartMetric, u: &Expr, p: &Point) -> Result<SymTensor2> {
    let field = ScalarField::for_metric(u.clone(), metric)?;
    let curv = metric.curvature(p)?;
    let jet = field.jet(metric, p)?;
    let hess = hessian_from(&curv.christoffel, &jet.grad, &jet.hess);
    Ok(l_star_from(&curv, &hess, jet.value))
}

/// `(L*u, u_ν ĝ − u h)` at a point of the face.
pub fn phi_star(metric: &ChartMetric, u: &Expr, q: &Point) -> Result<PhiStar> {
    let field = ScalarField::for_metric(u.clone(), metric)?;
    let curv = metric.curvature(q)?;
    let sff = sff_from(metric, q, &curv.factor, &curv.christoffel)?;
    let frozen = metric.face_value()?;
    let c = metric.face().ok_or(Error::NoBoundaryFace)?.coord;
    if (q.0[c] - frozen).abs() > 1e-12 * (1.0 + frozen.abs()) {
        return Err(Error::OutsideDomain { point: q.0.clone() });
    }
    let jet = field.jet(metric, q)?;
    let hess = hessian_from(&curv.christoffel, &jet.grad, &jet.hess);
    let u_nu = sff.normal_derivative(&jet.grad);
    Ok(PhiStar {
        interior: l_star_from(&curv, &hess, jet.value),
        boundary: sff.induced.scaled(u_nu).axpy(-jet.value, &sff.h),
    })
}

pub fn s_tensor(metric: &ChartMetric, mean_curvature: f64, p: &Point) -> Result<SymTensor2> {
    let curv = metric.curvature(p)?;
    let w = mean_curvature * mean_curvature / (metric.dim() as f64 - 1.0);
    Ok(curv.ricci.axpy(w, &curv.metric()))
}

pub fn local_identity_residual(
    metric: &ChartMetric,
    v: &Expr,
    mean_curvature: f64,
    p: &Point,
) -> Result<LocalIdentity> {
    let n = metric.dim();
    let n1 = n as f64 - 1.0;
    let field = ScalarField::for_metric(v.clone(), metric)?;
    let rg = metric.ricci_gradient(p)?;
    let curv = &rg.curvature;
    let r = curv.scalar;
    let drmax = rg.d_scalar.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if drmax > 1e-6 * (1.0 + r.abs()) {
        return Err(Error::NonConstantScalarCurvature(format!("|dR| = {drmax:e} at {:?}", p.0)));
    }
    let w = mean_curvature * mean_curvature / n1;
    let g = curv.metric();
    let s = curv.ricci.axpy(w, &g);
    let ds: Vec<SymTensor2> = (0..n)
        .map(|m| rg.d_ricci[m].axpy(w, &sym_from_full(n, &rg.local.dg[m * n * n..(m + 1) * n * n])))
        .collect();

    let jet = field.jet(metric, p)?;
    let ginv = curv.ginv();
    let gam = &curv.christoffel;
    let hess = hessian_from(gam, &jet.grad, &jet.hess);
    let up: Vec<f64> = (0..n).map(|b| (0..n).map(|c| ginv[(b, c)] * jet.grad[c]).sum()).collect();

    // X_j = S_jb ∇^b V and its partials.
    let x: Vec<f64> = (0..n).map(|j| (0..n).map(|b| s.get(j, b) * up[b]).sum()).collect();
    let dup = |i: usize, b: usize| -> f64 {
        (0..n)
            .map(|c| rg.d_ginv[i * n * n + b * n + c] * jet.grad[c] + ginv[(b, c)] * jet.hess[c * n + i])
            .sum()
    };
    let mut combined = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut dx = 0.0;
            for b in 0..n {
                dx += ds[i].get(j, b) * up[b] + s.get(j, b) * dup(i, b);
            }
            let corr: f64 = (0..n).map(|k| gam.get(k, i, j) * x[k]).sum();
            combined += ginv[(i, j)] * (dx - corr);
        }
    }
    let div_s = divergence_from(ginv, gam, &s, &ds);
    let split = hess.inner(&s, ginv) + div_s.iter().zip(&up).map(|(a, b)| a * b).sum::<f64>();

    let lhs = jet.value * s.inner(&s, ginv);
    let pinching = (r + mean_curvature * mean_curvature) / n1
        * (r + n as f64 * mean_curvature * mean_curvature / n1)
        * jet.value;
    Ok(LocalIdentity {
        lhs,
        divergence_combined: combined,
        divergence_split: split,
        pinching,
        residual: (lhs - combined - pinching).abs(),
        split_residual: (lhs - split - pinching).abs(),
    })
}

/// Check `L*V = 0` on interior samples and `V_ν ĝ = V h` on face samples.
pub fn verify_static(
    metric: &ChartMetric,
    potential: &PotentialSpec,
    plan: &SamplePlan,
    tolerance: f64,
) -> Result<StaticReport> {
    let n1 = metric.dim() as f64 - 1.0;
    let field = ScalarField::for_metric(potential.expr.clone(), metric)?;
    let interior = interior_points(metric, plan)?;
    if interior.is_empty() {
        return Err(Error::InvalidParameter("interior sample count must be positive".into()));
    }
    let mut interior_residual = 0.0f64;
    let mut trace_residual = 0.0f64;
    let (mut scalar_min, mut scalar_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut potential_min, mut potential_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &interior {
        let curv = metric.curvature(p)?;
        let jet = field.jet(metric, p)?;
        if !(jet.value > 0.0) {
            return Err(Error::NonPositivePotential { point: p.0.clone(), value: jet.value });
        }
        let hess = hessian_from(&curv.christoffel, &jet.grad, &jet.hess);
        let lap = hess.trace(curv.ginv());
        let ls = l_star_from(&curv, &hess, jet.value);
        let tr = ls.trace(curv.ginv());
        let expected = -n1 * lap - jet.value * curv.scalar;
        let scale = 1.0 + lap.abs() + (jet.value * curv.scalar).abs();
        if (tr - expected).abs() > 1e-10 * scale {
            return Err(Error::Consistency(format!(
                "tr L*V = {tr:e} but −(n−1)ΔV − VR = {expected:e} at {:?}",
                p.0
            )));
        }
        interior_residual = interior_residual.max(ls.op_norm(&curv.factor));
        trace_residual = trace_residual.max((lap + curv.scalar / n1 * jet.value).abs());
        scalar_min = scalar_min.min(curv.scalar);
        scalar_max = scalar_max.max(curv.scalar);
        potential_min = potential_min.min(jet.value);
        potential_max = potential_max.max(jet.value);
    }

    let face = if metric.face().is_some() { face_points(metric, plan)? } else { Vec::new() };
    let mut admissibility_residual = 0.0f64;
    for q in &face {
        let factor = metric.metric_factor(q)?;
        let gam = metric.christoffel(q)?;
        let sff = sff_from(metric, q, &factor, &gam)?;
        let jet = field.jet(metric, q)?;
        if potential.positivity == Positivity::Everywhere && !(jet.value > 0.0) {
            return Err(Error::NonPositivePotential { point: q.0.clone(), value: jet.value });
        }
        let u_nu = sff.normal_derivative(&jet.grad);
        let t = sff.induced.scaled(u_nu).axpy(-jet.value, &sff.h);
        admissibility_residual = admissibility_residual.max(t.op_norm(&sff.induced_factor));
    }

    let is_static_potential = interior_residual < tolerance;
    Ok(StaticReport {
        interior_residual,
        trace_residual,
        admissibility_residual,
        scalar_min,
        scalar_max,
        scalar_variation: scalar_max - scalar_min,
        potential_min,
        potential_max,
        interior_samples: interior.len(),
        boundary_samples: face.len(),
        tolerance,
        is_static_potential,
        is_admissible: is_static_potential && admissibility_residual < tolerance,
    })
}
