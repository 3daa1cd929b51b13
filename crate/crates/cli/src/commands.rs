use serde::Serialize;
use serde_json::{json, Value};
use statica_core::boundary::{boundary_identity_residual, boundary_report};
use statica_core::catalog::selftest;
use statica_core::classifier::{classify_obata, surjectivity_verdict};
use statica_core::integrals::{flux_scan, truncated_identity, wch_mass, FluxWeight};
use statica_core::sampling::{face_points, interior_points};
use statica_core::static_ops::{local_identity_residual, verify_static};
use statica_core::{Point, Subject, SymTensorField};

use crate::config::{Prepared, RunConfig};
use crate::CliError;

/// Relative residual accepted for the truncated divergence bookkeeping.
const TRUNCATED_TOL: f64 = 1e-6;

pub struct Outcome {
    pub report: Value,
    pub pass: bool,
}

fn value(x: &impl Serialize) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn mean_curvature(cfg: &RunConfig, p: &Prepared) -> Result<f64, CliError> {
    match cfg.mean_curvature {
        Some(h) => Ok(h),
        None => Ok(boundary_report(&p.chart, &cfg.sampling)?.mean_curvature_avg),
    }
}

pub fn dispatch(name: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    if name == "selftest" {
        let rep = selftest(&cfg.sampling, &cfg.quadrature)?;
        return Ok(Outcome { pass: rep.pass, report: value(&rep) });
    }
    let p = cfg.prepare()?;
    match name {
        "verify" => verify(cfg, &p),
        "curvature" => curvature(cfg, &p),
        "boundary" => boundary(cfg, &p),
        "flux" => flux(cfg, &p),
        "identity" => identity(cfg, &p),
        "classify" => {
            let h = mean_curvature(cfg, &p)?;
            let subject = Subject { chart: &p.chart, radial: p.radial.as_ref(), potential: p.potential()? };
            let v = classify_obata(&subject, h, &cfg.sampling, &cfg.tolerances)?;
            Ok(Outcome { pass: true, report: json!({ "obata": value(&v), "tolerances": value(&cfg.tolerances) }) })
        }
        "surjectivity" => {
            let subject = Subject { chart: &p.chart, radial: p.radial.as_ref(), potential: p.potential()? };
            let v = surjectivity_verdict(&subject, &cfg.sampling, &cfg.quadrature, &cfg.tolerances)?;
            Ok(Outcome {
                pass: true,
                report: json!({ "surjectivity": value(&v), "tolerances": value(&cfg.tolerances) }),
            })
        }
        "mass" => {
            let m = p.radial()?;
            let v = m.radial(p.potential()?.expr.clone())?;
            let rep = wch_mass(m, &v, &cfg.quadrature)?;
            Ok(Outcome { pass: true, report: json!({ "mass": value(&rep), "quadrature": value(&cfg.quadrature) }) })
        }
        other => unreachable!("unknown command {other}"),
    }
}

fn verify(cfg: &RunConfig, p: &Prepared) -> Result<Outcome, CliError> {
    let rep = verify_static(&p.chart, p.potential()?, &cfg.sampling, cfg.tolerances.residual)?;
    Ok(Outcome { pass: rep.is_static_potential, report: json!({ "static": value(&rep) }) })
}

fn curvature(cfg: &RunConfig, p: &Prepared) -> Result<Outcome, CliError> {
    let chart = &p.chart;
    let (mut r_min, mut r_max, mut ric_sup, mut sym, mut bianchi) =
        (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0f64, 0.0f64);
    let samples = interior_points(chart, &cfg.sampling)?;
    for q in &samples {
        let g = chart.ricci_gradient(q)?;
        let c = &g.curvature;
        r_min = r_min.min(c.scalar);
        r_max = r_max.max(c.scalar);
        ric_sup = ric_sup.max(c.ricci.op_norm(&c.factor));
        let (a, b, f) = c.riemann.symmetry_defects();
        sym = sym.max(a).max(b).max(f);
        let div = chart.divergence_symtensor(&SymTensorField::Ricci, q)?;
        for (d, ds) in div.iter().zip(&g.d_scalar) {
            bianchi = bianchi.max((d - 0.5 * ds).abs());
        }
    }
    let mut points = Vec::new();
    for x in cfg.points.iter().flatten() {
        let q = Point::new(x.clone());
        let c = chart.curvature(&q)?;
        let n = chart.dim();
        let ricci: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| c.ricci.get(i, j)).collect()).collect();
        points.push(json!({ "point": x, "scalar": c.scalar, "ricci": ricci }));
    }
    let mut radial = Vec::new();
    if let (Some(m), Some(radii)) = (&p.radial, &cfg.radii) {
        for &r in radii {
            let s = m.slice_at(r);
            radial.push(json!({ "s": s, "curvature": value(&m.curvature_radial(s)?) }));
        }
    }
    Ok(Outcome {
        pass: true,
        report: json!({
            "samples": samples.len(),
            "scalar_min": r_min,
            "scalar_max": r_max,
            "ricci_sup": ric_sup,
            "symmetry_defect": sym,
            "contracted_bianchi_residual": bianchi,
            "points": points,
            "radial": radial,
        }),
    })
}

fn boundary(cfg: &RunConfig, p: &Prepared) -> Result<Outcome, CliError> {
    let rep = boundary_report(&p.chart, &cfg.sampling)?;
    let mut doc = json!({ "boundary": value(&rep), "tolerance": cfg.tolerances.boundary });
    if let Some(v) = &p.potential {
        let (mut split, mut gauss) = (0.0f64, 0.0f64);
        for q in face_points(&p.chart, &cfg.sampling)? {
            let b = boundary_identity_residual(&p.chart, &v.expr, &q)?;
            split = split.max(b.laplace_split_residual);
            gauss = gauss.max(b.gauss_residual);
        }
        doc["identities"] = json!({ "laplace_split_residual": split, "gauss_residual": gauss });
    }
    Ok(Outcome { pass: true, report: doc })
}

fn flux(cfg: &RunConfig, p: &Prepared) -> Result<Outcome, CliError> {
    let m = p.radial()?;
    let v = m.radial(p.potential()?.expr.clone())?;
    let h = mean_curvature(cfg, p)?;
    let scan = flux_scan(m, &v, h, cfg.weight.unwrap_or(FluxWeight::S), &cfg.quadrature)?;
    if let Some(path) = &cfg.out {
        std::fs::write(path, scan.to_csv()).map_err(|source| CliError::Io { path: path.clone(), source })?;
    }
    Ok(Outcome {
        pass: scan.decay_holds.is_some(),
        report: json!({ "flux": value(&scan), "quadrature": value(&cfg.quadrature) }),
    })
}

fn identity(cfg: &RunConfig, p: &Prepared) -> Result<Outcome, CliError> {
    let v = p.potential()?;
    let h = mean_curvature(cfg, p)?;
    let (mut local, mut split) = (0.0f64, 0.0f64);
    for q in interior_points(&p.chart, &cfg.sampling)? {
        let li = local_identity_residual(&p.chart, &v.expr, h, &q)?;
        local = local.max(li.residual);
        split = split.max(li.split_residual);
    }
    let mut pass = local <= cfg.tolerances.residual && split <= cfg.tolerances.residual;
    let mut truncated = Vec::new();
    if let Some(m) = &p.radial {
        let radii = match (&cfg.radii, m.far_end()) {
            (Some(r), _) => r.clone(),
            (None, Some(_)) => {
                let r0 = (2.0 * m.boundary_value().abs()).max(2.0);
                vec![r0, 2.0 * r0, 10.0 * r0]
            }
            (None, None) => Vec::new(),
        };
        let radial_v = m.radial(v.expr.clone())?;
        for r in radii {
            let t = truncated_identity(m, &radial_v, h, r, &cfg.quadrature)?;
            pass &= t.relative_residual <= TRUNCATED_TOL;
            truncated.push(json!({ "r": r, "identity": value(&t) }));
        }
    }
    Ok(Outcome {
        pass,
        report: json!({
            "mean_curvature": h,
            "local_residual": local,
            "local_split_residual": split,
            "local_tolerance": cfg.tolerances.residual,
            "truncated": truncated,
            "truncated_tolerance": TRUNCATED_TOL,
        }),
    })
}
