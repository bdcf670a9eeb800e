use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use whitney_core::builtins::{crosscap, west};
use whitney_core::expr::{parse, VarSet};
use whitney_core::metric::{pullback, AffineChange, ChartBox, Immersion3, MetricField};
use whitney_core::singularity::{
    adjusted_chart, adjusted_metric, classify, find_singular_points, west_extract, Classification,
};
use whitney_core::verify::{pullback_fixtures, random_adjusted_change};

/// `Γᵏᵢⱼ = ½ gᵏˡ (∂ᵢ g_jl + ∂ⱼ g_il − ∂ₗ g_ij)`.
fn christoffel_index_form(m: &MetricField, p: [f64; 2]) -> [[[f64; 2]; 2]; 2] {
    let jets = m.jets(p, 1).unwrap();
    let g = jets.matrix();
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
    let d = |i: usize, j: usize, k: usize| {
        let jet = jets.entry(i, j);
        if k == 0 {
            jet.partial(1, 0)
        } else {
            jet.partial(0, 1)
        }
    };
    let mut out = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                out[k][i][j] = (0..2)
                    .map(|l| 0.5 * inv[k][l] * (d(j, l, i) + d(i, l, j) - d(i, j, l)))
                    .sum();
            }
        }
    }
    out
}

fn graph_polynomial(c: &[f64]) -> String {
    format!(
        "({:?})*u^2 + ({:?})*u*v + ({:?})*v^2 + ({:?})*u^3 + ({:?})*u*v^2 + ({:?})*v^3 + ({:?})*u^2*v^2",
        c[0], c[1], c[2], c[3], c[4], c[5], c[6]
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn christoffel_matches_index_formula(
        c in prop::collection::vec(-1.0f64..1.0, 7),
        u in -0.6f64..0.6,
        v in -0.6f64..0.6,
    ) {
        let h = graph_polynomial(&c);
        let m = pullback("graph", Immersion3::parse("u + 0.1*v^2", "v", &h, ChartBox::square(1.0)).unwrap());
        let got = m.christoffel([u, v]).unwrap();
        let want = christoffel_index_form(&m, [u, v]);
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let w = want[k][i][j];
                    prop_assert!((got.get(k, i, j) - w).abs() <= 1e-10 * (1.0 + w.abs()));
                }
            }
        }
    }

    #[test]
    fn brioschi_matches_graph_curvature(
        c in prop::collection::vec(-1.0f64..1.0, 7),
        u in -0.6f64..0.6,
        v in -0.6f64..0.6,
    ) {
        let h = graph_polynomial(&c);
        let m = pullback("graph", Immersion3::parse("u", "v", &h, ChartBox::square(1.0)).unwrap());
        let hj = parse(&h, VarSet::Surface).unwrap().eval_jet2([u, v], 2).unwrap();
        let (hu, hv) = (hj.partial(1, 0), hj.partial(0, 1));
        let want = (hj.partial(2, 0) * hj.partial(0, 2) - hj.partial(1, 1).powi(2))
            / (1.0 + hu * hu + hv * hv).powi(2);
        let got = m.gaussian_curvature([u, v]).unwrap();
        prop_assert!((got - want).abs() <= 1e-8 * (1.0 + want.abs()));
    }

    #[test]
    fn pullbacks_are_positive_semidefinite(
        which in 0usize..8,
        u in -1.0f64..1.0,
        v in -1.0f64..1.0,
    ) {
        let m = &pullback_fixtures()[which];
        let [e, f, g] = m.values([u, v]).unwrap();
        let scale = 1.0 + e.abs() + g.abs();
        prop_assert!(e >= 0.0 && g >= 0.0);
        prop_assert!(e * g - f * f >= -1e-12 * scale * scale);
    }

    #[test]
    fn relation_holds_on_generated_cross_caps(
        a02 in 0.3f64..3.0,
        a11 in -2.0f64..2.0,
        a20 in -2.0f64..2.0,
    ) {
        let r = classify(&west(a02, a11, a20), [0.0, 0.0]).unwrap();
        prop_assert_eq!(r.classification, Classification::IntrinsicCrossCap);
        prop_assert!(r.relation_residual.unwrap() < 1e-8);
        prop_assert!((r.alpha02.unwrap() - a02).abs() < 1e-9 * (1.0 + a02));
        // a cross cap is a nondegenerate minimum of λ
        prop_assert!(r.h_lambda > 0.0 && r.hessian[0][0] > 0.0);
    }
}

#[test]
fn alpha02_invariant_under_adjusted_changes() {
    let mut rng = StdRng::seed_from_u64(17);
    for m in [crosscap(), west(1.3, -0.7, 0.4)] {
        let reference = classify(&m, [0.0, 0.0]).unwrap().alpha02.unwrap();
        for _ in 0..20 {
            let change = random_adjusted_change(&mut rng, [0.0, 1.0]);
            let changed = m.affine(change, "changed");
            let a02 = classify(&changed, [0.0, 0.0]).unwrap().alpha02.unwrap();
            assert!((a02 - reference).abs() < 1e-7, "{a02} vs {reference}");
        }
    }
}

#[test]
fn alpha02_invariant_away_from_origin() {
    let im = Immersion3::parse("v+0.2", "(v+0.2)*(u-0.4)", "(u-0.4)^2 + 0.5*(u-0.4)*(v+0.2)", ChartBox::square(1.0))
        .unwrap();
    let m = pullback("moved", im);
    let pts = find_singular_points(&m);
    assert_eq!(pts.len(), 1);
    assert_abs_diff_eq!(pts[0][0], 0.4, epsilon = 1e-8);
    assert_abs_diff_eq!(pts[0][1], -0.2, epsilon = 1e-8);
    let r = classify(&m, pts[0]).unwrap();
    assert_abs_diff_eq!(r.alpha02.unwrap(), 2.0, epsilon = 1e-7);
    let adjusted = adjusted_metric(&m, pts[0]).unwrap();
    let w = west_extract(&adjusted).unwrap();
    assert_abs_diff_eq!(w.alpha02, 2.0, epsilon = 1e-8);
    assert_abs_diff_eq!(w.alpha11.abs(), 0.5, epsilon = 1e-8);
}

#[test]
fn west_coefficients_under_reflection() {
    let m = west(2.0, 3.0, 1.0);
    let flip = AffineChange {
        linear: [[1.0, 0.0], [0.0, -1.0]],
        translation: [0.0, 0.0],
    };
    let reflected = m.affine(flip, "reflected");
    let a = west_extract(&m).unwrap();
    let b = west_extract(&reflected).unwrap();
    assert_abs_diff_eq!(b.alpha02, a.alpha02, epsilon = 1e-12);
    assert_abs_diff_eq!(b.alpha11, -a.alpha11, epsilon = 1e-12);
    assert_abs_diff_eq!(b.alpha20, a.alpha20, epsilon = 1e-12);
    // the adjusted chart of the reflected metric keeps the flip
    let change = adjusted_chart(&reflected, [0.0, 0.0]).unwrap();
    assert_eq!(change.linear, [[1.0, 0.0], [0.0, 1.0]]);
}

#[test]
fn singular_points_of_all_fixtures_are_cross_caps() {
    for m in pullback_fixtures() {
        let pts = find_singular_points(&m);
        assert!(!pts.is_empty(), "{}", m.name);
        for p in pts {
            let r = classify(&m, p).unwrap();
            assert_eq!(r.classification, Classification::IntrinsicCrossCap, "{} at {p:?}", m.name);
        }
    }
}

#[test]
fn report_serializes_with_fixed_field_names() {
    let r = classify(&crosscap(), [0.0, 0.0]).unwrap();
    let v: serde_json::Value = serde_json::from_str(&whitney_core::report::to_json(&r).unwrap()).unwrap();
    for key in [
        "p",
        "lambda_value",
        "grad_lambda",
        "hessian",
        "H_lambda",
        "null_dir",
        "null_dim",
        "admissibility_residual",
        "Delta",
        "alpha",
        "alpha02",
        "classification",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["classification"], "intrinsic_cross_cap");
}
