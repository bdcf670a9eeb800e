use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use whitney_core::expr::{parse, BinOp, Expr, Func, Var, VarSet};
use whitney_core::jet::{Jet, Jet1, Jet2};
use whitney_core::verify::jet_fd_mismatch;

fn random_jet(coeffs: Vec<f64>, base: [f64; 2]) -> Jet2 {
    let mut it = coeffs.into_iter();
    Jet2::from_fn(base, 4, |_, _| it.next().unwrap_or(0.0))
}

fn assert_jets_close(a: &Jet2, b: &Jet2, tol: f64) {
    for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
        assert!((x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())), "{x} vs {y}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jet_partials_match_finite_differences(
        which in 0usize..4,
        u in -0.5f64..0.5,
        v in -0.5f64..0.5,
    ) {
        let fixtures = [
            "sin(u*v) + exp(u)*cos(v)",
            "sqrt(3 + u^2 + v)/(1 + u*u)",
            "(1 + u - v)^3 - exp(-u*v)",
            "exp(sin(u) + v^2)",
        ];
        prop_assert!(jet_fd_mismatch(fixtures[which], [u, v]) < 1e-6);
    }

    #[test]
    fn multiplication_commutes_and_associates(
        a in prop::collection::vec(-2.0f64..2.0, 15),
        b in prop::collection::vec(-2.0f64..2.0, 15),
        c in prop::collection::vec(-2.0f64..2.0, 15),
    ) {
        let base = [0.1, -0.2];
        let (a, b, c) = (random_jet(a, base), random_jet(b, base), random_jet(c, base));
        assert_jets_close(&(&a * &b), &(&b * &a), 1e-12);
        assert_jets_close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), 1e-12);
    }

    #[test]
    fn square_root_squares_back(
        a in prop::collection::vec(-1.0f64..1.0, 15),
        shift in 0.5f64..4.0,
    ) {
        let x = random_jet(a, [0.0, 0.0]).add_scalar(0.0);
        let x = {
            let mut y = x;
            let c0 = y.coeff(0, 0).abs() + shift;
            y.set_coeff(0, 0, c0);
            y
        };
        let r = x.sqrt().unwrap();
        assert_jets_close(&(&r * &r), &x, 1e-10);
    }

    #[test]
    fn printed_expressions_parse_back(e in arb_expr()) {
        let text = e.to_string();
        let back = parse(&text, VarSet::Surface).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn jet_constant_term_is_the_value(
        e in arb_expr(),
        u in -0.4f64..0.4,
        v in -0.4f64..0.4,
    ) {
        let scalar = e.eval_scalar([u, v, 0.0]);
        if let Ok(jet) = e.eval_jet2([u, v], 3) {
            if scalar.is_finite() {
                prop_assert!((jet.value() - scalar).abs() <= 1e-12 * (1.0 + scalar.abs()));
            }
        }
    }
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-5.0f64..5.0).prop_map(|x| Expr::num((x * 8.0).round() / 8.0)),
        Just(Expr::var(Var::U)),
        Just(Expr::var(Var::V)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), 0usize..4).prop_map(|(a, b, k)| {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][k];
                Expr::binary(op, a, b)
            }),
            (inner.clone(), 0u32..4).prop_map(|(a, n)| Expr::binary(BinOp::Pow, a, Expr::num(f64::from(n)))),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (inner, 0usize..3).prop_map(|(a, k)| Expr::Call([Func::Sin, Func::Cos, Func::Exp][k], Box::new(a))),
        ]
    })
}

#[test]
fn round_trip_fixed_corpus() {
    let corpus = [
        "u", "v", "u*v", "v^2", "u - v - 1", "-(u + v)", "-u^2", "2^3^2", "u/v/2", "sin(u)*cos(v)",
        "exp(-u)", "sqrt(1 + u^2)", "(u - 0.3)*(v + 0.1)", "u^2.5 + 1", "1e-3*u", "pi*u", "-2*-v",
        "((u))", "u^-1", "3.25e2 - v",
    ];
    for text in corpus {
        let e = parse(text, VarSet::Surface).unwrap();
        assert_eq!(parse(&e.to_string(), VarSet::Surface).unwrap(), e, "{text}");
    }
}

#[test]
fn curve_jets_follow_chain_rule() {
    let e = parse("sin(t^2)", VarSet::Curve).unwrap();
    let j = e.eval_jet1(0.7, 3).unwrap();
    let t: f64 = 0.7;
    assert_abs_diff_eq!(j.derivative(1), 2.0 * t * (t * t).cos(), epsilon = 1e-14);
    assert_abs_diff_eq!(
        j.derivative(2),
        2.0 * (t * t).cos() - 4.0 * t * t * (t * t).sin(),
        epsilon = 1e-13
    );
    let lin = Jet1::var(0.7, 3);
    assert_eq!(lin.derivative(1), 1.0);
}
