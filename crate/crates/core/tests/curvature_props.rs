mod common;

use common::{box_points, fd_ricci, perturbed_flat, random_analytic_metric};
use proptest::prelude::*;
use statica_core::static_ops::l_star;
use statica_core::{parse, ScalarField, SymTensorField};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5))]

    #[test]
    fn riemann_symmetries_and_first_bianchi(seed in any::<u64>()) {
        let g = random_analytic_metric(seed);
        for p in box_points(&g, 100, seed ^ 1) {
            let (anti, pair, bianchi) = g.riemann(&p).unwrap().symmetry_defects();
            prop_assert!(anti < 1e-10 && pair < 1e-10 && bianchi < 1e-10, "{anti:e} {pair:e} {bianchi:e} at {p:?}");
        }
    }

    #[test]
    fn contracted_second_bianchi(seed in any::<u64>()) {
        let g = perturbed_flat(seed);
        for p in box_points(&g, 20, seed ^ 2) {
            let div = g.divergence_symtensor(&SymTensorField::Ricci, &p).unwrap();
            let grad = g.ricci_gradient(&p).unwrap();
            for (d, ds) in div.iter().zip(&grad.d_scalar) {
                prop_assert!((d - 0.5 * ds).abs() < 1e-7, "div Ric {d} vs dR/2 {} at {p:?}", 0.5 * ds);
            }
        }
    }

    #[test]
    fn traces_of_ricci_and_hessian(seed in any::<u64>(), a in -1.0f64..1.0, b in 0.5f64..2.0) {
        let g = random_analytic_metric(seed);
        let u = parse(&format!("exp({a}*x) + sin({b}*y)*z^2")).unwrap();
        let field = ScalarField::for_metric(u.clone(), &g).unwrap();
        for p in box_points(&g, 10, seed ^ 3) {
            let c = g.curvature(&p).unwrap();
            let scale = 1.0 + c.scalar.abs();
            prop_assert!((c.ricci.trace(c.ginv()) - c.scalar).abs() < 1e-12 * scale);
            let hess = g.hessian(&field, &p).unwrap();
            let lap = g.laplacian(&field, &p).unwrap();
            prop_assert!((hess.trace(c.ginv()) - lap).abs() < 1e-12 * (1.0 + lap.abs()));
            // tr L*u = −(n−1)Δu − R u
            let value = field.value(&g, &p).unwrap();
            let l = l_star(&g, &u, &p).unwrap();
            let expect = -2.0 * lap - c.scalar * value;
            prop_assert!((l.trace(c.ginv()) - expect).abs() < 1e-10 * (1.0 + expect.abs()));
        }
    }
}

#[test]
fn ricci_agrees_with_finite_difference_oracle() {
    for seed in [11, 12, 13] {
        let g = random_analytic_metric(seed);
        for p in box_points(&g, 5, seed) {
            let ric = g.ricci(&p).unwrap();
            let oracle = fd_ricci(&g, &p.0);
            for (i, row) in oracle.iter().enumerate() {
                for (j, want) in row.iter().enumerate() {
                    assert!((ric.get(i, j) - want).abs() < 1e-5, "seed {seed} Ric[{i}][{j}] {} vs {want}", ric.get(i, j));
                }
            }
        }
    }
}

#[test]
fn random_metrics_are_curved() {
    // The symmetry defects are relative to the largest component, so a flat
    // fixture would make them vacuous.
    let g = random_analytic_metric(5);
    let p = &box_points(&g, 1, 5)[0];
    assert!(g.riemann(p).unwrap().max_abs() > 1e-3);
}
