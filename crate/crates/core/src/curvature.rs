//! Geodesic curvature of chart curves, one-sided limits at a cross cap and the
//! closed-form limit formulas that are checked against them.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{parse, EvalError, Expr, ParseError, VarSet};
use crate::jet::{Jet, Jet1, JetError, DEFAULT_ORDER};
use crate::metric::{MetricField, Point};
use crate::singularity::{null_space, WestCoefficients};

/// Chart-speed threshold `|γ̇|²` below which a curve is irregular.
pub const CURVE_REGULARITY_EPSILON: f64 = 1e-10;
/// Relative threshold on `EG - F²` (scaled by `(1 + |E| + |G|)²`) for curvature
/// evaluation. Small enough for sample ladders that approach a cross cap.
pub const CURVATURE_LAMBDA_EPSILON: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error("metric is degenerate at t = {t} (EG - F² = {lambda:e})")]
    Degenerate { t: f64, lambda: f64 },
    #[error("curve is irregular at t = {t} (|γ'|² = {speed2:e})")]
    Irregular { t: f64, speed2: f64 },
    #[error("parameter {t} lies outside the curve domain [{}, {}]", .domain[0], .domain[1])]
    OutOfDomain { t: f64, domain: [f64; 2] },
    #[error("invalid curve domain [{}, {}]", .0[0], .0[1])]
    BadDomain([f64; 2]),
    #[error("series expansion failed: {0}")]
    Series(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// A parameterized chart curve `t ↦ (u(t), v(t))`.
///
/// A reversed curve runs through the same points from `t₁` back to `t₀`,
/// still parameterized by `t ∈ [t₀, t₁]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve2 {
    pub name: String,
    pub u: Expr,
    pub v: Expr,
    pub domain: [f64; 2],
    pub reversed: bool,
}

impl Curve2 {
    pub fn new(name: impl Into<String>, u: Expr, v: Expr, domain: [f64; 2]) -> Result<Self, CurvatureError> {
        if !(domain[0].is_finite() && domain[1].is_finite() && domain[0] < domain[1]) {
            return Err(CurvatureError::BadDomain(domain));
        }
        Ok(Self {
            name: name.into(),
            u,
            v,
            domain,
            reversed: false,
        })
    }

    pub fn parse(name: impl Into<String>, u: &str, v: &str, domain: [f64; 2]) -> Result<Self, CurveParseError> {
        let u = parse(u, VarSet::Curve)?;
        let v = parse(v, VarSet::Curve)?;
        Ok(Self::new(name, u, v, domain)?)
    }

    pub fn reversed(&self) -> Self {
        Self {
            reversed: !self.reversed,
            ..self.clone()
        }
    }

    fn underlying(&self, t: f64) -> f64 {
        if self.reversed {
            self.domain[0] + self.domain[1] - t
        } else {
            t
        }
    }

    pub fn start(&self) -> Point {
        self.point(self.domain[0])
    }

    pub fn end(&self) -> Point {
        self.point(self.domain[1])
    }

    pub fn point(&self, t: f64) -> Point {
        let s = self.underlying(t);
        [self.u.eval_scalar([0.0, 0.0, s]), self.v.eval_scalar([0.0, 0.0, s])]
    }

    /// Taylor jets of `u` and `v` at `t`.
    pub fn jets(&self, t: f64, order: usize) -> Result<(Jet1, Jet1), EvalError> {
        let s = self.underlying(t);
        let u = self.u.eval_jet1(s, order)?;
        let v = self.v.eval_jet1(s, order)?;
        if !self.reversed {
            return Ok((u, v));
        }
        let flip = |j: &Jet1| {
            let coeffs = (0..=j.order())
                .map(|i| if i % 2 == 1 { -j.coeff(i) } else { j.coeff(i) })
                .collect();
            Jet1::from_coeffs(t, coeffs)
        };
        Ok((flip(&u), flip(&v)))
    }

    /// `(u̇, v̇)` at `t`.
    pub fn velocity(&self, t: f64) -> Result<[f64; 2], EvalError> {
        let (u, v) = self.jets(t, 1)?;
        Ok([u.coeff(1), v.coeff(1)])
    }

    /// Samples the open domain and fails at the first irregular parameter.
    pub fn check_regular(&self, samples: usize) -> Result<(), CurvatureError> {
        let n = samples.max(2);
        let [t0, t1] = self.domain;
        for k in 1..n {
            let t = t0 + (t1 - t0) * k as f64 / n as f64;
            let d = self.velocity(t)?;
            let speed2 = d[0] * d[0] + d[1] * d[1];
            if !(speed2 > CURVE_REGULARITY_EPSILON) {
                return Err(CurvatureError::Irregular { t, speed2 });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveParseError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Curve(#[from] CurvatureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub t: f64,
    pub speed2: f64,
    pub kappa_g: f64,
    pub ds_dt: f64,
    pub kappa_ds_dt: f64,
}

/// Geodesic curvature with respect to the left unit normal.
pub fn geodesic_curvature(m: &MetricField, c: &Curve2, t: f64) -> Result<CurvatureSample, CurvatureError> {
    let (uj, vj) = c.jets(t, 2)?;
    let (ud, udd) = (uj.coeff(1), 2.0 * uj.coeff(2));
    let (vd, vdd) = (vj.coeff(1), 2.0 * vj.coeff(2));
    let chart_speed2 = ud * ud + vd * vd;
    if !(chart_speed2 > CURVE_REGULARITY_EPSILON) {
        return Err(CurvatureError::Irregular { t, speed2: chart_speed2 });
    }
    let jets = m.jets([uj.value(), vj.value()], 1)?;
    let [e, f, g] = jets.values();
    let lambda = e * g - f * f;
    let scale = 1.0 + e.abs() + g.abs();
    if !(lambda > CURVATURE_LAMBDA_EPSILON * scale * scale) {
        return Err(CurvatureError::Degenerate { t, lambda });
    }
    let (eu, ev) = (jets.e.partial(1, 0), jets.e.partial(0, 1));
    let (fu, fv) = (jets.f.partial(1, 0), jets.f.partial(0, 1));
    let (gu, gv) = (jets.g.partial(1, 0), jets.g.partial(0, 1));
    let speed2 = ud * ud * e + 2.0 * ud * vd * f + vd * vd * g;
    if !(speed2 > 0.0) {
        return Err(CurvatureError::Irregular { t, speed2 });
    }
    let a = ud * vdd - vd * udd;
    let b = ud.powi(3) * (2.0 * e * fu - e * ev - f * eu) - vd.powi(3) * (2.0 * g * fv - g * gu - f * gv)
        + ud * ud * vd * (2.0 * e * gu - 3.0 * f * ev - g * eu + 2.0 * f * fu)
        - ud * vd * vd * (2.0 * g * ev - 3.0 * f * gu - e * gv + 2.0 * f * fv);
    let ds_dt = speed2.sqrt();
    let kappa_ds_dt = (a * lambda + 0.5 * b) / (lambda.sqrt() * speed2);
    Ok(CurvatureSample {
        t,
        speed2,
        kappa_g: kappa_ds_dt / ds_dt,
        ds_dt,
        kappa_ds_dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    KappaG,
    KappaDs,
}

impl Quantity {
    fn of(self, s: &CurvatureSample) -> f64 {
        match self {
            Quantity::KappaG => s.kappa_g,
            Quantity::KappaDs => s.kappa_ds_dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub value: f64,
    pub error_estimate: f64,
    pub samples_used: usize,
}

/// Richardson extrapolation on a ratio-2 ladder `x_k = q(h 2^{-k})` whose error
/// expansion has the given powers of the step.
///
/// Every window of `exponents.len() + 1` consecutive samples gives one estimate;
/// the reported value is the estimate that moved least from its predecessor.
pub fn richardson(samples: &[f64], exponents: &[f64]) -> Option<Extrapolation> {
    let m = exponents.len();
    if samples.len() < m + 2 {
        return None;
    }
    let estimate = |end: usize| {
        let mut row: Vec<f64> = samples[end - m..=end].to_vec();
        for &p in exponents {
            let w = 2f64.powf(p);
            row = row.windows(2).map(|x| (w * x[1] - x[0]) / (w - 1.0)).collect();
        }
        row[0]
    };
    let estimates: Vec<f64> = (m..samples.len()).map(estimate).collect();
    let mut best: Option<Extrapolation> = None;
    for k in 1..estimates.len() {
        let err = (estimates[k] - estimates[k - 1]).abs();
        if !err.is_finite() {
            continue;
        }
        if best.is_none_or(|b| err < b.error_estimate) {
            best = Some(Extrapolation {
                value: estimates[k],
                error_estimate: err,
                samples_used: m + k + 1,
            });
        }
    }
    best
}

/// Error powers of a quantity with a finite limit.
pub const LIMIT_EXPONENTS: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
/// Error powers of the constant term of `c/t + c₀ + O(t)`.
pub const CONSTANT_TERM_EXPONENTS: [f64; 5] = [-1.0, 1.0, 2.0, 3.0, 4.0];

/// True when the last four step ratios `|x_{k+1}/x_k|` are all at least 1.8.
pub fn ladder_diverges(samples: &[f64]) -> bool {
    if samples.len() < 5 {
        return false;
    }
    samples[samples.len() - 5..]
        .windows(2)
        .all(|w| w[0] != 0.0 && (w[1] / w[0]).abs() >= 1.8)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitOptions {
    /// First ladder offset from the limit point; defaults to a quarter of the
    /// domain, at most 0.25.
    pub start_step: Option<f64>,
    pub levels: usize,
    pub tolerance: f64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            start_step: None,
            levels: 20,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatus {
    Converges,
    Diverges,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub quantity: Quantity,
    /// Extrapolated limit; `±∞` when the ladder diverges.
    pub value: f64,
    pub error_estimate: f64,
    pub samples_used: usize,
    pub converged: bool,
    pub status: LimitStatus,
    /// Coefficient `c` of the `c/t` growth, when the ladder diverges.
    pub divergence_rate: Option<f64>,
    pub divergence_rate_error: Option<f64>,
}

/// Samples of a quantity at `t* + side · h 2^{-k}`, `k = 0..=levels`.
pub fn sample_ladder(
    m: &MetricField,
    c: &Curve2,
    t_star: f64,
    side: f64,
    quantity: Quantity,
    opts: &LimitOptions,
) -> Result<(Vec<f64>, Vec<f64>), CurvatureError> {
    let h = opts
        .start_step
        .unwrap_or_else(|| (0.25 * (c.domain[1] - c.domain[0])).min(0.25));
    let steps: Vec<f64> = (0..=opts.levels).map(|k| h * 0.5f64.powi(k as i32)).collect();
    let values = steps
        .par_iter()
        .map(|&dt| geodesic_curvature(m, c, t_star + side * dt).map(|s| quantity.of(&s)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((steps, values))
}

/// One-sided limit of a quantity as `t → t*` from the given side (`±1`).
pub fn limit_at(
    m: &MetricField,
    c: &Curve2,
    t_star: f64,
    side: f64,
    quantity: Quantity,
    opts: &LimitOptions,
) -> Result<LimitEstimate, CurvatureError> {
    let (steps, values) = sample_ladder(m, c, t_star, side, quantity, opts)?;
    if ladder_diverges(&values) {
        let scaled: Vec<f64> = steps.iter().zip(&values).map(|(dt, q)| dt * q).collect();
        let rate = richardson(&scaled, &LIMIT_EXPONENTS);
        let last = *values.last().expect("nonempty ladder");
        return Ok(LimitEstimate {
            quantity,
            value: f64::INFINITY.copysign(last),
            error_estimate: f64::INFINITY,
            samples_used: values.len(),
            converged: false,
            status: LimitStatus::Diverges,
            divergence_rate: rate.map(|r| r.value),
            divergence_rate_error: rate.map(|r| r.error_estimate),
        });
    }
    match richardson(&values, &LIMIT_EXPONENTS) {
        Some(x) => {
            let converged = x.error_estimate < opts.tolerance * (1.0 + x.value.abs());
            Ok(LimitEstimate {
                quantity,
                value: x.value,
                error_estimate: x.error_estimate,
                samples_used: x.samples_used,
                converged,
                status: if converged {
                    LimitStatus::Converges
                } else {
                    LimitStatus::Unresolved
                },
                divergence_rate: None,
                divergence_rate_error: None,
            })
        }
        None => Ok(LimitEstimate {
            quantity,
            value: f64::NAN,
            error_estimate: f64::INFINITY,
            samples_used: values.len(),
            converged: false,
            status: LimitStatus::Unresolved,
            divergence_rate: None,
            divergence_rate_error: None,
        }),
    }
}

/// Limit as `t → t₀⁺` for a curve that starts at a cross cap.
pub fn limit_at_singularity(m: &MetricField, c: &Curve2, quantity: Quantity) -> Result<LimitEstimate, CurvatureError> {
    limit_at(m, c, c.domain[0], 1.0, quantity, &LimitOptions::default())
}

/// Closed form of the limit of `κ_g` along `(t, v̇(0) t + …)` in a West chart.
pub fn transversal_limit_formula(w: &WestCoefficients, vdot0: f64) -> f64 {
    let (a02, a11, a20) = (w.alpha02, w.alpha11, w.alpha20);
    let s = a11 + a02 * vdot0;
    (2.0 * vdot0 + s * (a20 + vdot0 * (2.0 * a11 + a02 * vdot0))) / (1.0 + s * s).sqrt()
}

/// The `1/t` and constant coefficients of `κ_g` along `(u(t), t)` with
/// `u(0) = u̇(0) = 0`, as given by the closed-form tangential expansion.
pub fn tangential_series_formula(w: &WestCoefficients, udd0: f64, u3_0: f64, u4_0: f64) -> (f64, f64) {
    let (a, a11, a20) = (w.alpha02, w.alpha11, w.alpha20);
    let (p, q, r) = (udd0, u3_0, u4_0);
    let d = a * a + p * p;
    let c_minus1 = tangential_numerator(w, p, q) / (2.0 * d.powf(2.5));
    let bracket = -12.0 * a.powi(6)
        + 18.0 * a.powi(4) * p * p * (2.0 * a * a20 - 15.0 * a11 * a11 + 3.0)
        + 9.0 * a * a * p.powi(4) * (4.0 * a * a20 + 15.0 * a11 * a11 + 7.0)
        + 2.0 * q * a * a11 * (70.0 * a.powi(4) - 64.0 * a * a * p * p + p.powi(4))
        + 45.0 * q * q * a.powi(4)
        - 3.0 * p.powi(6);
    let c0 = (p * bracket - 12.0 * r * a.powi(4) * d) / (24.0 * a * d.powf(3.5));
    (c_minus1, c0)
}

/// Closed-form limit of `κ_g ds/dt` along a tangential curve.
pub fn tangential_measure_formula(w: &WestCoefficients, udd0: f64, u3_0: f64) -> f64 {
    let d = w.alpha02 * w.alpha02 + udd0 * udd0;
    tangential_numerator(w, udd0, u3_0) / (2.0 * d * d)
}

fn tangential_terms(w: &WestCoefficients, p: f64, q: f64) -> [f64; 4] {
    let (a, a11) = (w.alpha02, w.alpha11);
    [
        8.0 * a * a * a11 * p * p,
        -2.0 * q * a.powi(3),
        q * a * p * p,
        -a11 * p.powi(4),
    ]
}

fn tangential_numerator(w: &WestCoefficients, p: f64, q: f64) -> f64 {
    tangential_terms(w, p, q).iter().sum()
}

/// Whether the numerator of the closed-form `1/t` coefficient vanishes, judged
/// relative to the size of its terms.
pub fn boundedness_predicate(w: &WestCoefficients, udd0: f64, u3_0: f64) -> bool {
    let terms = tangential_terms(w, udd0, u3_0);
    let total: f64 = terms.iter().sum();
    let size: f64 = terms.iter().map(|x| x.abs()).sum();
    total.abs() <= 1e-9 * size
}

/// Leading coefficient of `r² K(r cos θ, r sin θ)` in a West chart.
pub fn k_asymptotic(w: &WestCoefficients, theta: f64) -> f64 {
    let (a02, a11, a20) = (w.alpha02, w.alpha11, w.alpha20);
    let (s, c) = theta.sin_cos();
    let d = c * c + (a11 * c + a02 * s).powi(2);
    a02 * (a20 * c * c - a02 * s * s) / (d * d)
}

/// Truncated Laurent series `Σ coeffs[i] t^{leading_power + i}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaurentSeries {
    pub leading_power: i32,
    pub coeffs: Vec<f64>,
}

impl LaurentSeries {
    pub fn coefficient(&self, power: i32) -> f64 {
        let i = power - self.leading_power;
        if i < 0 {
            0.0
        } else {
            self.coeffs.get(i as usize).copied().unwrap_or(f64::NAN)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesExpansion {
    pub kappa_g: LaurentSeries,
    pub kappa_ds: LaurentSeries,
    /// Vanishing order of `EG - F²` along the curve.
    pub lambda_valuation: usize,
    /// Vanishing order of the metric speed `|γ'|²_g`.
    pub speed_valuation: usize,
}

/// Laurent expansions of `κ_g` and `κ_g ds/dt` at the start of a curve, built
/// from Taylor jets of the metric and the curve.
pub fn series_at_start(m: &MetricField, c: &Curve2, order: usize) -> Result<SeriesExpansion, CurvatureError> {
    let k = order;
    let t0 = c.domain[0];
    let (u, v) = c.jets(t0, k + 2)?;
    let p = [u.value(), v.value()];
    let ud = u.d_dt();
    let vd = v.d_dt();
    let udd = ud.d_dt().truncate(k);
    let vdd = vd.d_dt().truncate(k);
    let (ud, vd) = (ud.truncate(k), vd.truncate(k));
    let du = u.truncate(k).add_scalar(-p[0]);
    let dv = v.truncate(k).add_scalar(-p[1]);

    let jets = m.jets(p, k + 1)?;
    let along = |j: &crate::jet::Jet2| j.truncate(k).compose(&du, &dv);
    let (e, f, g) = (along(&jets.e), along(&jets.f), along(&jets.g));
    let (eu, ev) = (along(&jets.e.d_du()), along(&jets.e.d_dv()));
    let (fu, fv) = (along(&jets.f.d_du()), along(&jets.f.d_dv()));
    let (gu, gv) = (along(&jets.g.d_du()), along(&jets.g.d_dv()));

    let two = |x: &Jet1| x.scale(2.0);
    let three = |x: &Jet1| x.scale(3.0);
    let cube = |x: &Jet1| x * &(x * x);
    let speed = &(&(&(&ud * &ud) * &e) + &two(&(&(&ud * &vd) * &f))) + &(&(&vd * &vd) * &g);
    let lambda = &(&e * &g) - &(&f * &f);
    let a = &(&ud * &vdd) - &(&vd * &udd);
    let b = &(&(&(&cube(&ud) * &(&(&two(&(&e * &fu)) - &(&e * &ev)) - &(&f * &eu)))
        - &(&cube(&vd) * &(&(&two(&(&g * &fv)) - &(&g * &gu)) - &(&f * &gv))))
        + &(&(&(&ud * &ud) * &vd)
            * &(&(&(&two(&(&e * &gu)) - &three(&(&f * &ev))) - &(&g * &eu)) + &two(&(&f * &fu)))))
        - &(&(&(&ud * &vd) * &vd)
            * &(&(&(&two(&(&g * &ev)) - &three(&(&f * &gu))) - &(&e * &gv)) + &two(&(&f * &fv))));
    let numerator = &(&a * &lambda) + &b.scale(0.5);

    let valuation = |x: &Jet1, what: &str| {
        let size = x.coeffs().iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        x.valuation(1e-12 * size.max(1e-300))
            .ok_or_else(|| CurvatureError::Series(format!("{what} vanishes to the jet order")))
    };
    let vl = valuation(&lambda, "EG - F²")?;
    let vs = valuation(&speed, "metric speed")?;
    if vl % 2 == 1 || vs % 2 == 1 {
        return Err(CurvatureError::Series("odd vanishing order".into()));
    }
    let root_lambda = lambda.shift_down(vl).sqrt()?;
    let speed_reduced = speed.shift_down(vs);
    let root_speed = speed_reduced.sqrt()?;
    let n = numerator.truncate(root_lambda.order().min(speed_reduced.order()));
    let q = n.div_jet(&(&root_lambda.truncate(n.order()) * &speed_reduced.truncate(n.order())))?;
    let r = q.div_jet(&root_speed.truncate(q.order()))?;
    let ds_power = -((vl / 2 + vs) as i32);
    Ok(SeriesExpansion {
        kappa_ds: LaurentSeries {
            leading_power: ds_power,
            coeffs: q.coeffs().to_vec(),
        },
        kappa_g: LaurentSeries {
            leading_power: ds_power - (vs / 2) as i32,
            coeffs: r.coeffs().to_vec(),
        },
        lambda_valuation: vl,
        speed_valuation: vs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Transversal,
    Tangential,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesComparison {
    pub quantity: String,
    /// Extrapolated from sampled curvature.
    pub oracle: f64,
    /// Read off the jet expansion.
    pub series: f64,
    /// Closed form under test.
    pub formula: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    /// `formula / oracle`, when the oracle is nonzero.
    pub ratio: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub curve: String,
    pub approach: Approach,
    pub entries: Vec<SeriesComparison>,
    pub verdict: Verdict,
}

/// Agreement threshold between a closed form and the oracle.
pub const COMPARE_TOLERANCE: f64 = 1e-5;

fn comparison(quantity: &str, oracle: f64, series: f64, formula: f64) -> SeriesComparison {
    let abs_diff = (formula - oracle).abs();
    let rel_diff = abs_diff / oracle.abs().max(f64::MIN_POSITIVE);
    let ratio = (oracle.abs() > 1e-12).then(|| formula / oracle);
    let ok = abs_diff <= COMPARE_TOLERANCE * oracle.abs().max(1.0);
    SeriesComparison {
        quantity: quantity.to_string(),
        oracle,
        series,
        formula,
        abs_diff,
        rel_diff,
        ratio,
        verdict: if ok { Verdict::Consistent } else { Verdict::Inconsistent },
    }
}

/// Whether a curve leaves its start point along the null direction.
pub fn approach_of(m: &MetricField, c: &Curve2) -> Result<Approach, CurvatureError> {
    let d = c.velocity(c.domain[0])?;
    let z = null_space(m, c.start())?.dir;
    let cross = d[0] * z[1] - d[1] * z[0];
    Ok(if cross.abs() <= 1e-9 * d[0].hypot(d[1]) {
        Approach::Tangential
    } else {
        Approach::Transversal
    })
}

/// Checks the closed-form limits against sampled curvature for a curve that
/// starts at the origin of a West chart.
///
/// Transversal curves are read as `(t, v(t))` up to reparameterization;
/// tangential ones as `(u(t), t)`.
pub fn compare_series(m: &MetricField, c: &Curve2, w: &WestCoefficients) -> Result<CompareReport, CurvatureError> {
    compare_series_with_order(m, c, w, DEFAULT_ORDER)
}

/// [`compare_series`] with an explicit jet order for the series column.
pub fn compare_series_with_order(
    m: &MetricField,
    c: &Curve2,
    w: &WestCoefficients,
    order: usize,
) -> Result<CompareReport, CurvatureError> {
    let approach = approach_of(m, c)?;
    let series = series_at_start(m, c, order)?;
    let opts = LimitOptions::default();
    let t0 = c.domain[0];
    let mut entries = Vec::new();
    match approach {
        Approach::Transversal => {
            let d = c.velocity(t0)?;
            let oracle = limit_at(m, c, t0, 1.0, Quantity::KappaG, &opts)?;
            let formula = transversal_limit_formula(w, d[1] / d[0]);
            entries.push(comparison(
                "kappa_g limit",
                oracle.value,
                series.kappa_g.coefficient(0),
                formula,
            ));
        }
        Approach::Tangential => {
            let (u, _) = c.jets(t0, 4)?;
            let (p, q, r) = (u.derivative(2), u.derivative(3), u.derivative(4));
            let (c_minus1, c0) = tangential_series_formula(w, p, q, r);
            let (steps, kappa) = sample_ladder(m, c, t0, 1.0, Quantity::KappaG, &opts)?;
            let scaled: Vec<f64> = steps.iter().zip(&kappa).map(|(h, x)| h * x).collect();
            let rate = richardson(&scaled, &LIMIT_EXPONENTS).map_or(f64::NAN, |x| x.value);
            let constant = richardson(&kappa, &CONSTANT_TERM_EXPONENTS).map_or(f64::NAN, |x| x.value);
            entries.push(comparison(
                "kappa_g 1/t coefficient",
                rate,
                series.kappa_g.coefficient(-1),
                c_minus1,
            ));
            entries.push(comparison(
                "kappa_g constant term",
                constant,
                series.kappa_g.coefficient(0),
                c0,
            ));
            let ds = limit_at(m, c, t0, 1.0, Quantity::KappaDs, &opts)?;
            entries.push(comparison(
                "kappa_ds limit",
                ds.value,
                series.kappa_ds.coefficient(0),
                tangential_measure_formula(w, p, q),
            ));
        }
    }
    let verdict = if entries.iter().all(|e| e.verdict == Verdict::Consistent) {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    };
    Ok(CompareReport {
        curve: c.name.clone(),
        approach,
        entries,
        verdict,
    })
}
