mod common;

use proptest::prelude::*;
use statica_core::catalog::{build, kottler, schwarzschild, ExampleName, Params};
use statica_core::chart::End;
use statica_core::integrals::{radial_divergence, radial_slice_flux, volume_integral};
use statica_core::sampling::{interior_points, SamplePlan};
use statica_core::{parse, Cohomog1Metric, Expr, Interval, Point, QuadratureSettings};

fn warped(n: usize, lapse: &str, warp: &str, kappa: f64, lo: f64, hi: f64) -> Cohomog1Metric {
    Cohomog1Metric::new(
        n,
        "r",
        parse(lapse).unwrap(),
        parse(warp).unwrap(),
        kappa,
        1.0,
        kappa == 0.0,
        Interval::new(lo, hi),
        End::Lower,
    )
    .unwrap()
}

fn fixtures() -> Vec<(&'static str, Cohomog1Metric)> {
    vec![
        ("kottler", kottler(4, 1.0, None, None).unwrap().metric),
        ("schwarzschild", schwarzschild(3, 2.0, None).unwrap().metric),
        ("cusp", build(ExampleName::Cusp, &Params::default()).unwrap().metric),
        ("lapse-sphere", warped(3, "1 + 0.1*r^2", "r + 0.2*sin(r)", 1.0, 1.0, 3.0)),
        ("hyperbolic-fiber", warped(3, "exp(0.1*r)", "exp(r) + exp(-r)", -1.0, 0.5, 2.0)),
        ("flat-fiber-4", warped(4, "sqrt(1 + r^2)", "r^2", 0.0, 1.0, 2.5)),
        ("sphere-fiber-5", warped(5, "1", "sin(r)", 3.0, 0.3, 2.5)),
    ]
}

#[test]
fn chart_and_radial_engines_agree() {
    let plan = SamplePlan { interior: 20, ..SamplePlan::default() };
    for (name, m) in fixtures() {
        let chart = m.to_chart().unwrap();
        for p in interior_points(&chart, &plan).unwrap() {
            let s = p.0[0];
            let rad = m.curvature_radial(s).unwrap();
            let c = chart.curvature(&p).unwrap();
            let g = c.metric();
            let scale = 1.0 + rad.ric_tt.abs() + rad.ric_tan.abs();
            let n = m.dim();
            for i in 0..n {
                for j in 0..n {
                    let per_unit = match (i, j) {
                        (0, 0) => rad.ric_tt,
                        (0, _) | (_, 0) => 0.0,
                        _ => rad.ric_tan,
                    };
                    let want = per_unit * g.get(i, j);
                    let got = c.ricci.get(i, j);
                    assert!(
                        (got - want).abs() < 1e-7 * scale * (1.0 + g.get(i, j).abs()),
                        "{name} Ric[{i}][{j}] at {p:?}: chart {got}, radial {want}"
                    );
                }
            }
            assert!((c.scalar - rad.scalar).abs() < 1e-7 * (1.0 + rad.scalar.abs()), "{name} R at s = {s}");
        }
    }
}

#[test]
fn warped_ricci_matches_differenced_warp() {
    // Ric in the unit normal direction is −(n−1) f''/f, tangentially
    // κ/f² − f''/f − (n−2) f'²/f², with ' the arclength derivative.
    let h = 1e-4;
    for (name, m) in fixtures() {
        let dom = m.domain().truncated(10.0);
        for k in 1..10 {
            let s = dom.lo + (dom.hi - dom.lo) * k as f64 / 10.0;
            let f = |s: f64| m.warp_jet(s).unwrap().0;
            let a = |s: f64| m.lapse_at(s).unwrap();
            let fp = |s: f64| (f(s + h) - f(s - h)) / (2.0 * h * a(s));
            let fpp = (fp(s + h) - fp(s - h)) / (2.0 * h * a(s));
            let (fv, fpv) = (f(s), fp(s));
            let n1 = m.dim() as f64 - 1.0;
            let tt = -n1 * fpp / fv;
            let tan = m.kappa() / (fv * fv) - fpp / fv - (n1 - 1.0) * fpv * fpv / (fv * fv);
            let rad = m.curvature_radial(s).unwrap();
            let tol = 1e-5 * (1.0 + tt.abs() + tan.abs());
            assert!((rad.ric_tt - tt).abs() < tol, "{name} tt at {s}: {} vs {tt}", rad.ric_tt);
            assert!((rad.ric_tan - tan).abs() < tol, "{name} tan at {s}: {} vs {tan}", rad.ric_tan);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cusp_sections_have_curvature_minus_lambda_squared(n in 2usize..5, lambda in 0.2f64..2.0) {
        let p = Params { n: Some(n), lambda: Some(lambda), ..Params::default() };
        let d = build(ExampleName::Cusp, &p).unwrap();
        let chart = d.chart().unwrap();
        // Deep in the cusp e^{2λt} leaves the representable conditioning range.
        let plan = SamplePlan { interior: 10, far: 6.0 / lambda, ..SamplePlan::default() };
        for q in interior_points(&chart, &plan).unwrap() {
            let c = chart.curvature(&q).unwrap();
            for i in 0..n {
                for j in i + 1..n {
                    let k = c.riemann.sectional(&c.factor.g, i, j);
                    prop_assert!((k + lambda * lambda).abs() < 1e-9, "K{i}{j} = {k} at {q:?}");
                }
            }
        }
    }

    #[test]
    fn divergence_theorem_on_kottler(
        c in prop::array::uniform3(-2.0f64..2.0),
        k in 1u8..4,
        w in 0.2f64..2.0,
        a in 1.5f64..5.0,
        len in 0.5f64..15.0,
    ) {
        let m = kottler(4, 1.0, None, None).unwrap().metric;
        let src = format!("{} + {}/r^{k} + {}*sin({w}*r)", c[0], c[1], c[2]);
        let phi = m.radial(parse(&src).unwrap()).unwrap();
        let settings = QuadratureSettings::default();
        let b = a + len;
        let volume = volume_integral(&m, |s| radial_divergence(&m, &phi, s), a, b, &settings).unwrap();
        let boundary = radial_slice_flux(&m, &phi, b).unwrap() - radial_slice_flux(&m, &phi, a).unwrap();
        let scale = radial_slice_flux(&m, &phi, b).unwrap().abs() + radial_slice_flux(&m, &phi, a).unwrap().abs();
        prop_assert!((volume - boundary).abs() < 1e-9 * (1.0 + scale), "{src} on [{a}, {b}]: {volume} vs {boundary}");
    }
}

#[test]
fn chart_points_cover_the_fiber_cube() {
    let m = kottler(4, 1.0, None, None).unwrap().metric;
    let chart = m.to_chart().unwrap();
    assert_eq!(chart.coords(), ["r", "x1", "x2", "x3"]);
    let p = Point::new(vec![2.0, 0.1, -0.1, 0.2]);
    assert!(chart.check_point(&p).is_ok());
    assert_eq!(m.radial(Expr::var("x1")).err().map(|e| e.to_string().contains("x1")), Some(true));
}
