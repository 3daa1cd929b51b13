use proptest::prelude::*;
use statica_core::expr::VarEnv;
use statica_core::{parse, Expr};

// Fully parenthesized sources in x and y. Domain trouble (log of a negative,
// division by zero) is filtered at evaluation time.
fn source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (-3.0f64..3.0).prop_map(|c| format!("{c:.4}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / (1.5 + {b}))")),
            (inner.clone(), 1u8..4).prop_map(|(a, k)| format!("({a})^{k}")),
            (inner.clone(), -1.5f64..1.5).prop_map(|(a, c)| format!("(1 + ({a})^2)^{c:.3}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (inner, prop::sample::select(vec!["exp", "log", "sqrt", "sin", "cos", "abs"]))
                .prop_map(|(a, f)| format!("{f}({a})")),
        ]
    })
}

fn at(e: &Expr, x: f64, y: f64) -> Option<f64> {
    e.evaluate(&VarEnv::from([("x", x), ("y", y)])).ok().filter(|v| v.is_finite() && v.abs() < 1e6)
}

fn five_point(e: &Expr, x: f64, y: f64, h: f64) -> Option<f64> {
    let f = |k: f64| at(e, x + k * h, y);
    Some((f(-2.0)? - 8.0 * f(-1.0)? + 8.0 * f(1.0)? - f(2.0)?) / (12.0 * h))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, max_global_rejects: 20_000, ..ProptestConfig::default() })]

    #[test]
    fn derivative_matches_five_point_stencil(src in source(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let e = parse(&src).unwrap();
        let d = e.differentiate("x");
        let exact = at(&d, x, y);
        let coarse = five_point(&e, x, y, 1e-3);
        let fine = five_point(&e, x, y, 5e-4);
        // A kink or pole inside the stencil shows up as disagreement between
        // the two step sizes; such samples say nothing about the derivative.
        prop_assume!(exact.is_some() && coarse.is_some() && fine.is_some());
        let (exact, coarse, fine) = (exact.unwrap(), coarse.unwrap(), fine.unwrap());
        let scale = 1.0 + exact.abs() + at(&e, x, y).unwrap_or(0.0).abs();
        prop_assume!((coarse - fine).abs() < 1e-6 * scale);
        prop_assert!((exact - fine).abs() < 1e-6 * scale, "{src}: exact {exact}, stencil {fine}");
    }

    #[test]
    fn print_then_parse_preserves_value(src in source(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let e = parse(&src).unwrap();
        let printed = e.to_string();
        let back = parse(&printed).unwrap();
        prop_assert_eq!(back.to_string(), printed.clone());
        match (at(&e, x, y), at(&back, x, y)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{printed}: {a} vs {b}"),
            (a, b) => prop_assert_eq!(a.is_some(), b.is_some(), "{}", printed),
        }
    }

    #[test]
    fn derivative_of_printed_tree_is_printed_derivative(src in source()) {
        let e = parse(&src).unwrap();
        let once = e.differentiate("y").to_string();
        let again = parse(&e.to_string()).unwrap().differentiate("y").to_string();
        prop_assert_eq!(once, again);
    }
}

#[test]
fn syntax_errors_carry_offsets() {
    for (src, offset) in [("1 +", 3), ("(x", 0), ("x $ y", 2), ("foo(x)", 0)] {
        let err = parse(src).unwrap_err();
        assert_eq!(err.offset, offset, "{src}: {err}");
    }
}
