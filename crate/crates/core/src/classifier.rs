//! Obata-type classification and the local-surjectivity verdict.

use serde::Serialize;

use crate::boundary::boundary_report;
use crate::chart::{ChartMetric, Point, ScalarField};
use crate::cohomog1::Cohomog1Metric;
use crate::curvature::hessian_from;
use crate::error::{Error, Result};
use crate::integrals::{decay_liminf, QuadratureSettings};
use crate::sampling::{interior_points, normal_line, SamplePlan};
use crate::static_ops::{verify_static, PotentialSpec, StaticReport};

/// Thresholds used by the classifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Static residual bound for `L*V`.
    pub residual: f64,
    /// Bound on `sup|VS| / sup V` below which `VS = 0` is declared.
    pub obata: f64,
    /// Absolute tolerance for pinching equalities and curvature tests.
    pub pinching: f64,
    /// Bound for boundary deficits (H variation, umbilicity).
    pub boundary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { residual: 1e-8, obata: 1e-6, pinching: 1e-8, boundary: 1e-8 }
    }
}

/// A metric with a potential, plus the radial description when one exists.
#[derive(Clone, Copy, Debug)]
pub struct Subject<'a> {
    pub chart: &'a ChartMetric,
    pub radial: Option<&'a Cohomog1Metric>,
    pub potential: &'a PotentialSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObataTag {
    #[serde(rename = "type_i")]
    TypeI,
    #[serde(rename = "type_ii")]
    TypeII,
    NotObata,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObataSubTag {
    HyperbolicCusp,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObataVerdict {
    pub tag: ObataTag,
    pub sub_tag: Option<ObataSubTag>,
    /// Why the tag was chosen when a check failed.
    pub note: Option<String>,
    /// `sup|VS| / sup V` over interior samples.
    pub vs_normalized: f64,
    pub vs_sup: f64,
    pub scalar: f64,
    pub mean_curvature: f64,
    pub lambda: f64,
    /// `(R + H²)(R + (n/(n−1))H²)`
    pub pinching_product: f64,
    pub ricci_sup: f64,
    pub h_norm: f64,
    /// `(max − min) Q / sup V²` for `Q = |DV|² − λ²V²`.
    pub q_deviation: Option<f64>,
    /// `sup |D_ν Q| / sup V²` along the face-normal coordinate direction.
    pub q_normal_derivative: Option<f64>,
    /// Worst relative misfit of `V₀ e^{λt}` along the normal line.
    pub exp_fit_deviation: Option<f64>,
    pub exp_fit_rate: Option<f64>,
    pub fiber_ricci_flat: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Surjectivity {
    Yes,
    /// The sufficient conditions do not apply; nothing is claimed.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurjectivityVerdict {
    pub surjective: Surjectivity,
    /// First condition that fired, 1 to 3.
    pub condition: Option<u8>,
    pub mean_curvature: f64,
    pub mean_curvature_variation: f64,
    pub umbilicity_deficit: f64,
    pub scalar: f64,
    pub pinching_holds: bool,
    /// `None` on compact domains, where no decay is needed.
    pub decay_holds: Option<bool>,
    pub decay_limit: Option<f64>,
    pub is_admissible: bool,
    pub obata: ObataVerdict,
    /// Caveats that qualify the verdict.
    pub notes: Vec<String>,
}

/// Decides `−(n/(n−1))H² ≤ R ≤ −H²` twice, once from the endpoints and once
/// from the sign of `(R + H²)(R + (n/(n−1))H²)`, and insists they agree away
/// from the endpoints.
fn pinching_holds(n: usize, r: f64, h: f64, tol: f64) -> Result<bool> {
    let lower = -(n as f64) / (n as f64 - 1.0) * h * h;
    let upper = -h * h;
    let by_interval = lower - tol <= r && r <= upper + tol;
    // Both equalities at once force H = 0.
    if (r - lower).abs() <= tol && (r - upper).abs() <= tol && h * h / (n as f64 - 1.0) > 2.0 * tol {
        return Err(Error::Consistency(format!("R = {r} sits on both pinching endpoints with H = {h}")));
    }
    let near_end = (r - lower).abs() <= tol || (r - upper).abs() <= tol;
    if !near_end && by_interval != ((r - upper) * (r - lower) <= 0.0) {
        return Err(Error::Consistency(format!("pinching tests disagree at R = {r}, H = {h}")));
    }
    Ok(by_interval)
}

fn require_static(subject: &Subject<'_>, plan: &SamplePlan, tol: &Tolerances) -> Result<StaticReport> {
    let rep = verify_static(subject.chart, subject.potential, plan, tol.residual)?;
    if !rep.is_static_potential {
        return Err(Error::Prerequisite(format!(
            "V is not a static potential (residual {:e})",
            rep.interior_residual
        )));
    }
    Ok(rep)
}

/// Arclength along the face-normal coordinate line, negative inside.
fn normal_arclength(chart: &ChartMetric, line: &[Point]) -> Result<Vec<f64>> {
    let c = chart.face().ok_or(Error::NoBoundaryFace)?.coord;
    let speed = |p: &Point| -> Result<f64> { Ok(chart.metric_factor(p)?.g[(c, c)].sqrt()) };
    let mut t = vec![0.0];
    for w in line.windows(2) {
        let mid = Point::new(
            w[0].0.iter().zip(&w[1].0).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<_>>(),
        );
        let ds = (w[1].0[c] - w[0].0[c]).abs();
        let seg = ds / 6.0 * (speed(&w[0])? + 4.0 * speed(&mid)? + speed(&w[1])?);
        t.push(t[t.len() - 1] - seg);
    }
    Ok(t)
}

fn constant_sectional(chart: &ChartMetric, points: &[Point], k: f64, tol: f64) -> Result<bool> {
    let n = chart.dim();
    for p in points.iter().take(20) {
        let c = chart.curvature(p)?;
        for i in 0..n {
            for j in i + 1..n {
                if (c.riemann.sectional(&c.factor.g, i, j) - k).abs() > tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

pub fn classify_obata(
    subject: &Subject<'_>,
    mean_curvature: f64,
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<ObataVerdict> {
    require_static(subject, plan, tol)?;
    let chart = subject.chart;
    let n = chart.dim();
    let n1 = n as f64 - 1.0;
    let field = ScalarField::for_metric(subject.potential.expr.clone(), chart)?;
    let w = mean_curvature * mean_curvature / n1;
    let lambda = mean_curvature / n1;
    let points = interior_points(chart, plan)?;

    let (mut vs_sup, mut v_sup, mut ricci_sup, mut r_sum) = (0.0f64, 0.0f64, 0.0f64, 0.0);
    let (mut q_min, mut q_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut dq_sup = 0.0f64;
    let normal_coord = chart.face().map(|f| f.coord);
    for p in &points {
        let curv = chart.curvature(p)?;
        let jet = field.jet(chart, p)?;
        let s = curv.ricci.axpy(w, &curv.metric());
        vs_sup = vs_sup.max(jet.value.abs() * s.op_norm(&curv.factor));
        v_sup = v_sup.max(jet.value.abs());
        ricci_sup = ricci_sup.max(curv.ricci.op_norm(&curv.factor));
        r_sum += curv.scalar;
        let ginv = curv.ginv();
        let mut dv2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                dv2 += ginv[(i, j)] * jet.grad[i] * jet.grad[j];
            }
        }
        let q = dv2 - lambda * lambda * jet.value * jet.value;
        q_min = q_min.min(q);
        q_max = q_max.max(q);
        if let Some(c) = normal_coord {
            // D_e Q = 2 Hess V(DV, e) − 2λ² V e(V) for the unit coordinate field e.
            let hess = hessian_from(&curv.christoffel, &jet.grad, &jet.hess);
            let mut hv = 0.0;
            for i in 0..n {
                for k in 0..n {
                    hv += hess.get(i, c) * ginv[(i, k)] * jet.grad[k];
                }
            }
            let len = curv.factor.g[(c, c)].sqrt();
            let dq = 2.0 * (hv - lambda * lambda * jet.value * jet.grad[c]) / len;
            dq_sup = dq_sup.max(dq.abs());
        }
    }
    let scalar = r_sum / points.len() as f64;
    let vs_normalized = vs_sup / v_sup;
    let h_norm = boundary_report(chart, plan)?.h_norm;
    let fiber_ricci_flat = subject.radial.map(|m| m.kappa() == 0.0);
    let mut verdict = ObataVerdict {
        tag: ObataTag::NotObata,
        sub_tag: None,
        note: None,
        vs_normalized,
        vs_sup,
        scalar,
        mean_curvature,
        lambda,
        pinching_product: (scalar + mean_curvature * mean_curvature) * (scalar + n as f64 * w),
        ricci_sup,
        h_norm,
        q_deviation: None,
        q_normal_derivative: None,
        exp_fit_deviation: None,
        exp_fit_rate: None,
        fiber_ricci_flat,
    };

    if vs_normalized >= 10.0 * tol.obata {
        return Ok(verdict);
    }
    if vs_normalized > 0.1 * tol.obata {
        verdict.tag = ObataTag::Inconclusive;
        verdict.note = Some("sup|VS|/sup V lies within a decade of the threshold".into());
        return Ok(verdict);
    }
    if mean_curvature.abs() < tol.pinching {
        if ricci_sup < tol.obata && h_norm < tol.boundary {
            verdict.tag = ObataTag::TypeI;
        } else {
            verdict.tag = ObataTag::Inconclusive;
            verdict.note = Some(format!("VS ≈ 0 with H ≈ 0 but |Ric| = {ricci_sup:e}, |h| = {h_norm:e}"));
        }
        return Ok(verdict);
    }

    let q_dev = (q_max - q_min) / (v_sup * v_sup);
    verdict.q_deviation = Some(q_dev);
    let dq = normal_coord.map(|_| dq_sup / (v_sup * v_sup));
    verdict.q_normal_derivative = dq;
    let line = normal_line(chart, 32, plan.far)?;
    let t = normal_arclength(chart, &line)?;
    let v: Vec<f64> = line.iter().map(|p| field.value(chart, p)).collect::<Result<_>>()?;
    if v.iter().any(|x| !(*x > 0.0)) {
        verdict.tag = ObataTag::Inconclusive;
        verdict.note = Some("V is not positive along the normal line".into());
        return Ok(verdict);
    }
    let (log_v0, rate) = log_linear(&t, &v);
    let fit_dev = t
        .iter()
        .zip(&v)
        .map(|(ti, vi)| ((log_v0 + rate * ti).exp() - vi).abs() / vi)
        .fold(0.0f64, f64::max);
    verdict.exp_fit_deviation = Some(fit_dev);
    verdict.exp_fit_rate = Some(rate);

    let mut failures = Vec::new();
    if (scalar + n as f64 * w).abs() > tol.pinching {
        failures.push(format!("R + (n/(n−1))H² = {:e}", scalar + n as f64 * w));
    }
    if q_dev > tol.obata || dq.is_some_and(|d| d > tol.obata) {
        failures.push(format!("Q varies by {q_dev:e}, normal derivative {dq:?}"));
    }
    if fit_dev > tol.obata || (rate - lambda).abs() > tol.obata * (1.0 + lambda.abs()) {
        failures.push(format!("V is not V₀e^(λt): rate {rate}, misfit {fit_dev:e}"));
    }
    if !failures.is_empty() {
        verdict.tag = ObataTag::Inconclusive;
        verdict.note = Some(failures.join("; "));
        return Ok(verdict);
    }
    verdict.tag = ObataTag::TypeII;
    let cusp = match subject.radial {
        Some(m) => m.fiber_flat(),
        None => constant_sectional(chart, &points, -lambda * lambda, tol.obata)?,
    };
    if cusp {
        verdict.sub_tag = Some(ObataSubTag::HyperbolicCusp);
    }
    Ok(verdict)
}

/// Least-squares fit `ln v ≈ a + b t`.
fn log_linear(t: &[f64], v: &[f64]) -> (f64, f64) {
    let m = t.len() as f64;
    let y: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let mt = t.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let stt: f64 = t.iter().map(|x| (x - mt).powi(2)).sum();
    let sty: f64 = t.iter().zip(&y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let b = sty / stt;
    (my - b * mt, b)
}

pub fn surjectivity_verdict(
    subject: &Subject<'_>,
    plan: &SamplePlan,
    settings: &QuadratureSettings,
    tol: &Tolerances,
) -> Result<SurjectivityVerdict> {
    let stat = require_static(subject, plan, tol)?;
    let chart = subject.chart;
    let n = chart.dim();
    let bnd = boundary_report(chart, plan)?;
    let h = bnd.mean_curvature_avg;
    let scalar = 0.5 * (stat.scalar_min + stat.scalar_max);
    let pinching_holds = pinching_holds(n, scalar, h, tol.pinching)?;

    let (decay_holds, decay_limit) = if chart.is_compact() {
        (None, None)
    } else {
        match subject.radial {
            Some(m) => {
                let v = m.radial(subject.potential.expr.clone())?;
                let scan = decay_liminf(m, &v, h, settings)?;
                (Some(scan.decay_holds.unwrap_or(false)), Some(scan.limit))
            }
            None => (Some(false), None),
        }
    };
    let obata = classify_obata(subject, h, plan, tol)?;

    let condition = if bnd.mean_curvature_variation > tol.boundary {
        Some(1)
    } else if bnd.umbilicity_deficit > tol.boundary {
        Some(2)
    } else if pinching_holds && decay_holds != Some(false) && obata.tag == ObataTag::NotObata {
        Some(3)
    } else {
        None
    };
    let mut notes = Vec::new();
    if !stat.is_admissible {
        notes.push("V does not satisfy the boundary condition; decay and conditions were evaluated for the supplied V".into());
    }
    if decay_holds.is_none() {
        notes.push("compact domain: the decay requirement is vacuous".into());
    }
    Ok(SurjectivityVerdict {
        notes,
        surjective: if condition.is_some() { Surjectivity::Yes } else { Surjectivity::Unknown },
        condition,
        mean_curvature: h,
        mean_curvature_variation: bnd.mean_curvature_variation,
        umbilicity_deficit: bnd.umbilicity_deficit,
        scalar,
        pinching_holds,
        decay_holds,
        decay_limit,
        is_admissible: stat.is_admissible,
        obata,
    })
}
