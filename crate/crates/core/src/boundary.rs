//! Extrinsic geometry of a coordinate face: normal, second fundamental form,
//! mean curvature and the boundary identities for a potential.

use serde::Serialize;

use crate::chart::{ChartMetric, Point, ScalarField};
use crate::curvature::{hessian_from, Christoffel, Curvature};
use crate::error::{Error, Result};
use crate::expr::{Expr, VarEnv};
use crate::sampling::{face_points, SamplePlan};
use crate::tensor::{MetricFactor, SymTensor2};

/// Second fundamental form `h(X,Y) = −⟨ν, D_X Y⟩` on a face, with `ν` the
/// outward unit normal. Tangential tensors are indexed by the free coordinates
/// in chart order.
#[derive(Clone, Debug)]
pub struct SecondFundamentalForm {
    pub point: Point,
    /// Contravariant components `ν^i`.
    pub normal: Vec<f64>,
    pub h: SymTensor2,
    pub induced: SymTensor2,
    pub induced_factor: MetricFactor,
    pub mean_curvature: f64,
    /// Chart indices of the tangential coordinates.
    pub tangential: Vec<usize>,
}

impl SecondFundamentalForm {
    /// `h − (H/(n−1)) ĝ`
    pub fn trace_free(&self) -> SymTensor2 {
        let k = self.tangential.len() as f64;
        self.h.axpy(-self.mean_curvature / k, &self.induced)
    }

    /// Sup of `|h − (H/(n−1))ĝ|` over unit tangent vectors.
    pub fn umbilicity_deficit(&self) -> f64 {
        self.trace_free().op_norm(&self.induced_factor)
    }

    /// `ν^i ∂_i f`
    pub fn normal_derivative(&self, grad: &[f64]) -> f64 {
        self.normal.iter().zip(grad).map(|(a, b)| a * b).sum()
    }
}

/// Face-wide aggregates over a deterministic sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub mean_curvature: Vec<f64>,
    pub mean_curvature_avg: f64,
    pub mean_curvature_variation: f64,
    pub umbilicity_deficit: f64,
    pub normal_ricci_deficit: f64,
    /// Largest `|h|` operator norm, used for total-geodesic checks.
    pub h_norm: f64,
    /// Largest `|tr_ĝ(h − (H/(n−1))ĝ)|`, a well-formedness check.
    pub trace_free_trace: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryIdentity {
    pub laplace_split_residual: f64,
    pub gauss_residual: f64,
}

fn check_on_face(metric: &ChartMetric, q: &Point) -> Result<usize> {
    let face = metric.face().ok_or(Error::NoBoundaryFace)?;
    metric.check_point(q)?;
    let frozen = metric.face_value()?;
    if (q.0[face.coord] - frozen).abs() > 1e-12 * (1.0 + frozen.abs()) {
        return Err(Error::OutsideDomain { point: q.0.clone() });
    }
    Ok(face.coord)
}

pub(crate) fn sff_from(
    metric: &ChartMetric,
    q: &Point,
    factor: &MetricFactor,
    gam: &Christoffel,
) -> Result<SecondFundamentalForm> {
    let face = metric.face().ok_or(Error::NoBoundaryFace)?;
    let c = face.coord;
    let n = metric.dim();
    let gcc = factor.ginv[(c, c)];
    if !(gcc > 0.0) {
        return Err(Error::DegenerateFace(format!("g^cc = {gcc:e} at {:?}", q.0)));
    }
    let scale = gcc.sqrt();
    let sign = face.end.sign();
    let normal: Vec<f64> = (0..n).map(|i| sign * factor.ginv[(i, c)] / scale).collect();
    let tangential: Vec<usize> = (0..n).filter(|&i| i != c).collect();
    let m = tangential.len();
    let h = SymTensor2::from_upper(m, |a, b| -sign * gam.get(c, tangential[a], tangential[b]) / scale);
    let induced = SymTensor2::from_upper(m, |a, b| factor.g[(tangential[a], tangential[b])]);
    let induced_factor = MetricFactor::new(induced.to_matrix(), &q.0)
        .map_err(|e| Error::DegenerateFace(e.to_string()))?;
    let mean_curvature = h.trace(&induced_factor.ginv);
    Ok(SecondFundamentalForm {
        point: q.clone(),
        normal,
        h,
        induced,
        induced_factor,
        mean_curvature,
        tangential,
    })
}

pub fn second_fundamental_form(metric: &ChartMetric, q: &Point) -> Result<SecondFundamentalForm> {
    check_on_face(metric, q)?;
    let factor = metric.metric_factor(q)?;
    let gam = metric.christoffel(q)?;
    sff_from(metric, q, &factor, &gam)
}

/// `Ric(ν, ·)` restricted to tangential directions, measured with `ĝ`.
fn normal_ricci(sff: &SecondFundamentalForm, curv: &Curvature) -> f64 {
    let n = curv.dim();
    let w: Vec<f64> = sff
        .tangential
        .iter()
        .map(|&a| (0..n).map(|i| sff.normal[i] * curv.ricci.get(i, a)).sum())
        .collect();
    let ginv = &sff.induced_factor.ginv;
    let mut acc = 0.0;
    for a in 0..w.len() {
        for b in 0..w.len() {
            acc += ginv[(a, b)] * w[a] * w[b];
        }
    }
    acc.max(0.0).sqrt()
}

pub fn boundary_report(metric: &ChartMetric, plan: &SamplePlan) -> Result<BoundaryReport> {
    let points = face_points(metric, plan)?;
    if points.is_empty() {
        return Err(Error::InvalidParameter("boundary sample count must be positive".into()));
    }
    let mut mean_curvature = Vec::with_capacity(points.len());
    let mut umbilicity_deficit = 0.0f64;
    let mut normal_ricci_deficit = 0.0f64;
    let mut h_norm = 0.0f64;
    let mut trace_free_trace = 0.0f64;
    for q in &points {
        let curv = metric.curvature(q)?;
        let sff = sff_from(metric, q, &curv.factor, &curv.christoffel)?;
        mean_curvature.push(sff.mean_curvature);
        umbilicity_deficit = umbilicity_deficit.max(sff.umbilicity_deficit());
        normal_ricci_deficit = normal_ricci_deficit.max(normal_ricci(&sff, &curv));
        h_norm = h_norm.max(sff.h.op_norm(&sff.induced_factor));
        trace_free_trace = trace_free_trace.max(sff.trace_free().trace(&sff.induced_factor.ginv).abs());
    }
    let (lo, hi) = mean_curvature
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &h| (a.min(h), b.max(h)));
    let mean_curvature_avg = mean_curvature.iter().sum::<f64>() / mean_curvature.len() as f64;
    Ok(BoundaryReport {
        mean_curvature,
        mean_curvature_avg,
        mean_curvature_variation: hi - lo,
        umbilicity_deficit,
        normal_ricci_deficit,
        h_norm,
        trace_free_trace,
    })
}

/// The face as a chart of its own, with the induced metric.
pub fn induced_chart(metric: &ChartMetric) -> Result<ChartMetric> {
    let face = metric.face().ok_or(Error::NoBoundaryFace)?;
    let frozen = Expr::constant(metric.face_value()?);
    let c = face.coord;
    let name = &metric.coords()[c];
    let tangential: Vec<usize> = (0..metric.dim()).filter(|&i| i != c).collect();
    let mut upper = Vec::new();
    for (a, &i) in tangential.iter().enumerate() {
        for &j in &tangential[a..] {
            upper.push(metric.component(i, j).substitute(name, &frozen));
        }
    }
    ChartMetric::from_upper(
        tangential.iter().map(|&i| metric.coords()[i].clone()).collect(),
        upper,
        tangential.iter().map(|&i| metric.domain()[i]).collect(),
        None,
    )
}

/// Laplacian along a one-dimensional face with induced metric `h dy²`:
/// `f''/h − h' f' / (2h²)`.
fn curve_laplacian(metric: &ChartMetric, v: &Expr, c: usize, q: &Point) -> Result<f64> {
    let t = 1 - c;
    let names = metric.coords();
    let frozen = Expr::constant(q.0[c]);
    let h = metric.component(t, t).substitute(&names[c], &frozen);
    let f = v.substitute(&names[c], &frozen);
    let env = VarEnv::new().with(&names[t], q.0[t]);
    let y = &names[t];
    let (hv, hp) = (h.evaluate(&env)?, h.differentiate(y).evaluate(&env)?);
    let (fp, fpp) = (f.differentiate(y).evaluate(&env)?, f.differentiate(y).differentiate(y).evaluate(&env)?);
    Ok(fpp / hv - hp * fp / (2.0 * hv * hv))
}

/// Residuals of `ΔV = Δ_∂V + H V_ν + Hess V(ν,ν)` and of
/// `Δ_∂V + (H²/(n−1) + Ric(ν,ν)) V = 0` at a face point.
pub fn boundary_identity_residual(metric: &ChartMetric, v: &Expr, q: &Point) -> Result<BoundaryIdentity> {
    let c = check_on_face(metric, q)?;
    let curv = metric.curvature(q)?;
    let sff = sff_from(metric, q, &curv.factor, &curv.christoffel)?;
    let field = ScalarField::for_metric(v.clone(), metric)?;
    let jet = field.jet(metric, q)?;
    let hess = hessian_from(&curv.christoffel, &jet.grad, &jet.hess);
    let laplacian = hess.trace(curv.ginv());
    let n = metric.dim();
    let nu = &sff.normal;
    let quad = |t: &SymTensor2| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += t.get(i, j) * nu[i] * nu[j];
            }
        }
        acc
    };
    let v_nu = sff.normal_derivative(&jet.grad);
    let hess_nn = quad(&hess);
    let ric_nn = quad(&curv.ricci);

    let frozen = Expr::constant(q.0[c]);
    let lap_face = if n == 2 {
        curve_laplacian(metric, v, c, q)?
    } else {
        let face = induced_chart(metric)?;
        let v_face = ScalarField::for_metric(v.substitute(&metric.coords()[c], &frozen), &face)?;
        let q_face = Point::new(
            q.0.iter().enumerate().filter(|(i, _)| *i != c).map(|(_, x)| *x).collect::<Vec<_>>(),
        );
        face.laplacian(&v_face, &q_face)?
    };

    let hm = sff.mean_curvature;
    Ok(BoundaryIdentity {
        laplace_split_residual: (laplacian - (lap_face + hm * v_nu + hess_nn)).abs(),
        gauss_residual: (lap_face + (hm * hm / (n as f64 - 1.0) + ric_nn) * jet.value).abs(),
    })
}
