use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use whitney_core::builtins::{crosscap, plane, west};
use whitney_core::curvature::{
    boundedness_predicate, compare_series, geodesic_curvature, k_asymptotic, limit_at_singularity, series_at_start,
    tangential_series_formula, transversal_limit_formula, Approach, Curve2, LimitStatus, Quantity, Verdict,
};
use whitney_core::metric::MetricField;
use whitney_core::quadrature::{gauss_legendre, scaled_rule};
use whitney_core::singularity::{west_extract, WestCoefficients};
use whitney_core::verify::continuity_ladder;

/// `g(∇_γ' γ', n) / |γ'|²` with `n` the metric rotation of the unit tangent.
fn covariant_oracle(m: &MetricField, c: &Curve2, t: f64) -> f64 {
    let (u, v) = c.jets(t, 2).unwrap();
    let d = [u.coeff(1), v.coeff(1)];
    let dd = [2.0 * u.coeff(2), 2.0 * v.coeff(2)];
    let p = [u.coeff(0), v.coeff(0)];
    let gamma = m.christoffel(p).unwrap();
    let mut acc = dd;
    for (k, a) in acc.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                *a += gamma.get(k, i, j) * d[i] * d[j];
            }
        }
    }
    let [e, f, g] = m.values(p).unwrap();
    let lambda = e * g - f * f;
    // g(Jx, y) = √λ (x₁y₂ − x₂y₁)  ⇒  Jx = √λ g⁻¹ (−x₂, x₁)
    let w = [-d[1], d[0]];
    let jd = [
        lambda.sqrt() * (g * w[0] - f * w[1]) / lambda,
        lambda.sqrt() * (-f * w[0] + e * w[1]) / lambda,
    ];
    let inner = |x: [f64; 2], y: [f64; 2]| e * x[0] * y[0] + f * (x[0] * y[1] + x[1] * y[0]) + g * x[1] * y[1];
    let speed2 = inner(d, d);
    let normal_len = inner(jd, jd).sqrt();
    inner(acc, jd) / normal_len / speed2
}

fn curve(u: &str, v: &str) -> Curve2 {
    Curve2::parse("c", u, v, [0.0, 1.0]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn curvature_matches_covariant_derivative(
        coeffs in prop::collection::vec(-1.0f64..1.0, 6),
        t in 0.05f64..0.95,
        use_west in any::<bool>(),
    ) {
        let m = if use_west { west(1.5, 0.5, -0.7) } else { crosscap() };
        let c = curve(
            &format!("0.3 + ({:?})*t + ({:?})*t^2 + ({:?})*t^3", coeffs[0], coeffs[1], coeffs[2]),
            &format!("-0.2 + ({:?})*t + ({:?})*sin(t) + ({:?})*t^2", coeffs[3], coeffs[4], coeffs[5]),
        );
        let p = c.point(t);
        let [e, f, g] = m.values(p).unwrap();
        let d = c.velocity(t).unwrap();
        prop_assume!(e * g - f * f > 1e-4 && d[0].hypot(d[1]) > 1e-3);
        let got = geodesic_curvature(&m, &c, t).unwrap().kappa_g;
        let want = covariant_oracle(&m, &c, t);
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{} vs {}", got, want);
    }

    #[test]
    fn transversal_limits_match_closed_form(
        a02 in 0.5f64..3.0,
        a11 in -2.0f64..2.0,
        a20 in -2.0f64..2.0,
        slope in -2.0f64..2.0,
    ) {
        let m = west(a02, a11, a20);
        let w = west_extract(&m).unwrap();
        let c = Curve2::parse("c", "t", &format!("({slope:?})*t"), [0.0, 0.5]).unwrap();
        let l = limit_at_singularity(&m, &c, Quantity::KappaG).unwrap();
        prop_assert!(l.converged);
        prop_assert!((l.value - transversal_limit_formula(&w, slope)).abs() < 1e-5);
        let s = series_at_start(&m, &c, 8).unwrap();
        prop_assert!((s.kappa_g.coefficient(0) - l.value).abs() < 1e-6);
    }

    #[test]
    fn series_and_ladder_agree_on_tangential_curves(
        a02 in 0.5f64..3.0,
        a11 in -2.0f64..2.0,
        a20 in -2.0f64..2.0,
        p in -1.5f64..1.5,
        q in -1.5f64..1.5,
    ) {
        let m = west(a02, a11, a20);
        let c = Curve2::parse("c", &format!("({p:?})*t^2/2 + ({q:?})*t^3/6"), "t", [0.0, 0.5]).unwrap();
        let s = series_at_start(&m, &c, 8).unwrap();
        let l = limit_at_singularity(&m, &c, Quantity::KappaDs).unwrap();
        prop_assert!((s.kappa_ds.coefficient(0) - l.value).abs() < 1e-6);
        // the closed form for the leading coefficient of a tangential curve
        let d = a02 * a02 + p * p;
        let leading = -(q * a02 - 3.0 * p * p * a11) / (2.0 * d.powf(1.5));
        prop_assert!((s.kappa_g.coefficient(-1) - leading).abs() < 1e-9 * (1.0 + leading.abs()));
    }
}

#[test]
fn closed_forms_along_example_curves() {
    let m = crosscap();
    let curves = [curve("t", "t"), curve("t^2/2", "t"), curve("t^3/6", "t"), curve("t^4/24", "t")];
    let kappa: [fn(f64) -> f64; 4] = [
        |t| 6.0 / ((4.0 * t * t + 5.0).sqrt() * (8.0 * t * t + 1.0).powf(1.5)),
        |t| -84.0 / ((9.0 * t * t + 20.0).powf(1.5) * (17.0 * t * t + 16.0).sqrt()),
        |t| {
            let t2 = t * t;
            72.0 * (t2 * t2 - 96.0 * t2 - 36.0)
                / (t * (t2 * t2 + 144.0 * t2 + 144.0).sqrt() * (16.0 * t2 * t2 + 9.0 * t2 + 144.0).powf(1.5))
        },
        |t| {
            let t2 = t * t;
            96.0 * (5.0 * t2.powi(3) - 8640.0 * t2 - 4608.0)
                / ((t2.powi(3) + 2304.0 * t2 + 2304.0).sqrt() * (25.0 * t2.powi(3) + 16.0 * t2 * t2 + 2304.0).powf(1.5))
        },
    ];
    let measure: [fn(f64) -> f64; 4] = [
        |t| 6.0 / ((4.0 * t * t + 5.0).sqrt() * (8.0 * t * t + 1.0)),
        |t| -42.0 * t / ((9.0 * t * t + 20.0) * (17.0 * t * t + 16.0).sqrt()),
        |t| {
            let t2 = t * t;
            12.0 * (t2 * t2 - 96.0 * t2 - 36.0)
                / ((t2 * t2 + 144.0 * t2 + 144.0).sqrt() * (16.0 * t2 * t2 + 9.0 * t2 + 144.0))
        },
        |t| {
            let t2 = t * t;
            4.0 * t * (5.0 * t2.powi(3) - 8640.0 * t2 - 4608.0)
                / ((t2.powi(3) + 2304.0 * t2 + 2304.0).sqrt() * (25.0 * t2.powi(3) + 16.0 * t2 * t2 + 2304.0))
        },
    ];
    for (i, c) in curves.iter().enumerate() {
        for t in [0.01, 0.1, 0.3, 0.7, 1.0] {
            let s = geodesic_curvature(&m, c, t).unwrap();
            let (k, ds) = (kappa[i](t), measure[i](t));
            assert!((s.kappa_g - k).abs() <= 1e-12 * (1.0 + k.abs()), "curve {i} t {t}: {} vs {k}", s.kappa_g);
            assert!((s.kappa_ds_dt - ds).abs() <= 1e-12 * (1.0 + ds.abs()), "curve {i} t {t}");
        }
    }
}

#[test]
fn measure_is_continuous_along_example_curves() {
    let m = crosscap();
    for c in [curve("t", "t"), curve("t^2/2", "t"), curve("t^3/6", "t"), curve("t^4/24", "t")] {
        let x = continuity_ladder(&m, &c).unwrap();
        let inc: Vec<f64> = x.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(inc.windows(2).all(|w| w[1] <= w[0]));
        assert!(*inc.last().unwrap() < 1e-6);
    }
}

#[test]
fn circles_have_constant_curvature() {
    for r in [0.5, 1.0, 2.0] {
        let c = Curve2::parse("circle", &format!("{r:?}*cos(t)"), &format!("{r:?}*sin(t)"), [0.0, 6.0]).unwrap();
        for t in [0.0, 1.3, 4.0] {
            assert_abs_diff_eq!(geodesic_curvature(&plane(), &c, t).unwrap().kappa_g, 1.0 / r, epsilon = 1e-13);
        }
    }
}

fn arc_measure(m: &MetricField, c: &Curve2, a: f64, b: f64) -> f64 {
    scaled_rule(&gauss_legendre(40), a, b)
        .iter()
        .map(|&(t, w)| w * geodesic_curvature(m, c, t).unwrap().kappa_ds_dt)
        .sum()
}

#[test]
fn reparameterization_invariance() {
    let m = west(1.5, 0.5, -0.7);
    let c = Curve2::parse("c", "0.2 + t", "0.1 + t^2 - 0.3*t", [0.0, 1.0]).unwrap();
    let fast = Curve2::parse("fast", "0.2 + 2*t", "0.1 + (2*t)^2 - 0.3*(2*t)", [0.0, 0.5]).unwrap();
    for t in [0.1, 0.4, 0.9] {
        let a = geodesic_curvature(&m, &c, t).unwrap().kappa_g;
        let b = geodesic_curvature(&m, &fast, t / 2.0).unwrap().kappa_g;
        assert!((a - b).abs() < 1e-8);
    }
    let a = arc_measure(&m, &c, 0.1, 0.9);
    let b = arc_measure(&m, &fast, 0.05, 0.45);
    assert!((a - b).abs() < 1e-8);
}

#[test]
fn reversing_a_curve_flips_the_sign() {
    let m = crosscap();
    let c = curve("0.2 + t", "t^2");
    let r = c.reversed();
    let a = geodesic_curvature(&m, &c, 0.3).unwrap();
    let b = geodesic_curvature(&m, &r, 0.7).unwrap();
    assert_abs_diff_eq!(a.kappa_g, -b.kappa_g, epsilon = 1e-13);
    assert_abs_diff_eq!(a.ds_dt, b.ds_dt, epsilon = 1e-13);
}

#[test]
fn predicate_zero_set_differs_from_boundedness() {
    // On west(2, 1, 0) with ü = 1 the curvature is bounded exactly when
    // u⁽³⁾ = 3/2, while the closed-form numerator vanishes at u⁽³⁾ = 31/14.
    let m = west(2.0, 1.0, 0.0);
    let w = west_extract(&m).unwrap();
    let along = |q: f64| Curve2::parse("c", &format!("t^2/2 + ({q:?})*t^3/6"), "t", [0.0, 0.5]).unwrap();

    let bounded = along(1.5);
    let l = limit_at_singularity(&m, &bounded, Quantity::KappaG).unwrap();
    assert_eq!(l.status, LimitStatus::Converges);
    assert!(!boundedness_predicate(&w, 1.0, 1.5));

    let flagged = along(31.0 / 14.0);
    assert!(boundedness_predicate(&w, 1.0, 31.0 / 14.0));
    let l = limit_at_singularity(&m, &flagged, Quantity::KappaG).unwrap();
    assert_eq!(l.status, LimitStatus::Diverges);
    let s = series_at_start(&m, &flagged, 8).unwrap();
    assert!(s.kappa_g.coefficient(-1).abs() > 1e-2);
}

#[test]
fn predicate_agrees_on_the_example_fixtures() {
    let w = WestCoefficients::new(2.0, 0.0, 0.0);
    let m = crosscap();
    for (u, p, q) in [("t^2/2", 1.0, 0.0), ("t^3/6", 0.0, 1.0), ("t^4/24", 0.0, 0.0)] {
        let l = limit_at_singularity(&m, &curve(u, "t"), Quantity::KappaG).unwrap();
        assert_eq!(boundedness_predicate(&w, p, q), l.status == LimitStatus::Converges, "{u}");
    }
}

#[test]
fn compare_series_reports() {
    let m = crosscap();
    let w = west_extract(&m).unwrap();
    let r = compare_series(&m, &curve("t", "t"), &w).unwrap();
    assert_eq!((r.approach, r.verdict), (Approach::Transversal, Verdict::Consistent));

    let r = compare_series(&m, &curve("t^3/6", "t"), &w).unwrap();
    assert_eq!(r.verdict, Verdict::Inconsistent);
    let lead = &r.entries[0];
    assert_abs_diff_eq!(lead.oracle, -0.125, epsilon = 1e-6);
    assert_abs_diff_eq!(lead.series, -0.125, epsilon = 1e-12);
    assert_abs_diff_eq!(lead.formula, -0.25, epsilon = 1e-15);

    let r = compare_series(&m, &curve("t^4/24", "t"), &w).unwrap();
    let constant = r.entries.iter().find(|e| e.quantity == "kappa_g constant term").unwrap();
    assert_abs_diff_eq!(constant.ratio.unwrap(), 1.5, epsilon = 1e-6);

    // the printed constant term also misses the second example curve
    let r = compare_series(&m, &curve("t^2/2", "t"), &w).unwrap();
    let constant = r.entries.iter().find(|e| e.quantity == "kappa_g constant term").unwrap();
    assert_eq!(constant.verdict, Verdict::Inconsistent);
    assert_abs_diff_eq!(constant.oracle, -21.0 / (40.0 * 5f64.sqrt()), epsilon = 1e-6);
    let (_, c0) = tangential_series_formula(&w, 1.0, 0.0, 0.0);
    assert_abs_diff_eq!(constant.formula, c0, epsilon = 1e-15);
}

#[test]
fn curvature_asymptotics_on_crosscap() {
    let m = crosscap();
    let w = WestCoefficients::new(2.0, 0.0, 0.0);
    for theta in [0.3, 1.0, std::f64::consts::FRAC_PI_2, 2.5] {
        let r = 1e-4;
        let k = m.gaussian_curvature([r * theta.cos(), r * theta.sin()]).unwrap();
        assert!((r * r * k - k_asymptotic(&w, theta)).abs() < 1e-3, "θ = {theta}");
    }
}
