//! Degenerate points of a metric: detection, admissibility, classification and
//! the intrinsic invariants of a cross cap.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::EvalError;
use crate::jet::Jet;
use crate::metric::{det3, AffineChange, MetricField, MetricJets, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SingularityError {
    #[error("metric has no null direction at ({}, {})", .0[0], .0[1])]
    NoNullSpace(Point),
    #[error("chart is not a second-order West chart (fit residual {fit_residual:e})")]
    NotWestChart { fit_residual: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    pub grid: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub merge_radius: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            grid: 21,
            max_iterations: 50,
            gradient_tolerance: 1e-12,
            merge_radius: 1e-6,
        }
    }
}

/// Relative tolerance for null eigenvalues of the metric matrix.
pub const NULL_TOLERANCE: f64 = 1e-9;
/// Relative tolerance on `λ`, `∇λ` and the admissibility residual in [`classify`].
pub const CLASSIFY_TOLERANCE: f64 = 1e-8;
/// Relative Morse threshold on `det Hess λ`.
pub const HESSIAN_THRESHOLD: f64 = 1e-8;
/// Maximum coefficient mismatch accepted by [`west_extract`].
pub const WEST_FIT_TOLERANCE: f64 = 1e-8;

/// Eigenvalues (ascending) and unit eigenvectors of a symmetric 2×2 matrix.
pub fn sym_eigen(m: [[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let low = mean - radius;
    let high = mean + radius;
    let vector = |mu: f64| {
        let c1 = [b, mu - a];
        let c2 = [mu - d, b];
        let n1 = c1[0].hypot(c1[1]);
        let n2 = c2[0].hypot(c2[1]);
        if n1 == 0.0 && n2 == 0.0 {
            return None;
        }
        let (c, n) = if n1 >= n2 { (c1, n1) } else { (c2, n2) };
        Some([c[0] / n, c[1] / n])
    };
    let v0 = match vector(low) {
        Some(v) => v,
        None if a <= d => [1.0, 0.0],
        None => [0.0, 1.0],
    };
    let v1 = [-v0[1], v0[0]];
    ([low, high], [canonical_sign(v0), canonical_sign(v1)])
}

/// Flips a vector so that its largest-magnitude component is positive. Signed
/// zeros are cleared.
fn canonical_sign(v: [f64; 2]) -> [f64; 2] {
    let key = if v[0].abs() >= v[1].abs() { v[0] } else { v[1] };
    let v = if key < 0.0 { [-v[0], -v[1]] } else { v };
    [v[0] + 0.0, v[1] + 0.0]
}

fn newton(m: &MetricField, start: Point, opts: &SearchOptions) -> Option<Point> {
    let slack = 0.1 * (m.chart.width() + m.chart.height());
    let mut x = start;
    for _ in 0..opts.max_iterations {
        let l = m.lambda_jet(x, 2).ok()?;
        let g = l.grad();
        let h = l.hessian();
        let gnorm = g[0].hypot(g[1]);
        let scale = 1.0 + h[0][0].abs().max(h[1][1].abs()).max(h[0][1].abs());
        if gnorm < opts.gradient_tolerance * scale {
            return Some(x);
        }
        let step = pseudo_solve(h, g);
        if !(step[0].is_finite() && step[1].is_finite()) {
            return None;
        }
        let next = [x[0] - step[0], x[1] - step[1]];
        if !m.chart.contains(next, slack) {
            return None;
        }
        let moved = step[0].hypot(step[1]);
        x = next;
        if moved <= 1e-15 * (1.0 + x[0].hypot(x[1])) {
            return Some(x);
        }
    }
    let g = m.lambda_jet(x, 1).ok()?.grad();
    (g[0].hypot(g[1]) < 1e-8).then_some(x)
}

/// `H⁺ g` with small eigenvalues of `H` dropped.
fn pseudo_solve(h: [[f64; 2]; 2], g: [f64; 2]) -> [f64; 2] {
    let (vals, vecs) = sym_eigen(h);
    let cutoff = 1e-12 * vals[0].abs().max(vals[1].abs());
    let mut out = [0.0, 0.0];
    for k in 0..2 {
        if vals[k].abs() > cutoff && vals[k] != 0.0 {
            let coef = (vecs[k][0] * g[0] + vecs[k][1] * g[1]) / vals[k];
            out[0] += coef * vecs[k][0];
            out[1] += coef * vecs[k][1];
        }
    }
    out
}

pub fn find_singular_points(m: &MetricField) -> Vec<Point> {
    find_singular_points_with(m, &SearchOptions::default())
}

/// Multi-start Newton on `∇λ = 0` from a grid over the chart box.
pub fn find_singular_points_with(m: &MetricField, opts: &SearchOptions) -> Vec<Point> {
    let starts = m.chart.grid(opts.grid);
    let lambda_max = starts
        .par_iter()
        .filter_map(|&p| m.lambda(p).ok())
        .filter(|l| l.is_finite())
        .reduce(|| 0.0, f64::max);
    let tol = 1e-9 * (1.0 + lambda_max);
    let mut found: Vec<Point> = starts
        .par_iter()
        .filter_map(|&p| newton(m, p, opts))
        .filter(|&q| m.chart.contains(q, opts.merge_radius))
        .filter(|&q| m.lambda(q).map(|l| l < tol).unwrap_or(false))
        .collect();
    found.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut merged: Vec<Point> = Vec::new();
    for q in found {
        if !merged
            .iter()
            .any(|r| (q[0] - r[0]).hypot(q[1] - r[1]) < opts.merge_radius)
        {
            merged.push(q);
        }
    }
    merged
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullSpace {
    pub dim: usize,
    /// Eigenvector of the smallest eigenvalue of the metric matrix.
    pub dir: [f64; 2],
}

pub fn null_space(m: &MetricField, p: Point) -> Result<NullSpace, EvalError> {
    Ok(null_space_of(m.values(p)?))
}

fn null_space_of([e, f, g]: [f64; 3]) -> NullSpace {
    let (vals, vecs) = sym_eigen([[e, f], [f, g]]);
    let tol = NULL_TOLERANCE * (1.0 + e.abs() + g.abs());
    let dim = vals.iter().filter(|l| l.abs() < tol).count();
    NullSpace { dim, dir: vecs[0] }
}

/// `max_{i,j} |Γ(∂ᵢ, ∂ⱼ, Z)|` for the unit null vector `Z`.
pub fn admissibility_residual(m: &MetricField, p: Point) -> Result<f64, SingularityError> {
    let jets = m.jets(p, 1)?;
    let ns = null_space_of(jets.values());
    let dirs: Vec<[f64; 2]> = match ns.dim {
        0 => return Err(SingularityError::NoNullSpace(p)),
        1 => vec![ns.dir],
        _ => vec![[1.0, 0.0], [0.0, 1.0]],
    };
    Ok(dirs
        .iter()
        .map(|&z| pseudo_connection_max(&jets, z))
        .fold(0.0, f64::max))
}

fn pseudo_connection_max(jets: &MetricJets, z: [f64; 2]) -> f64 {
    let d = |i: usize, j: usize, k: usize| {
        let jet = jets.entry(i, j);
        if k == 0 {
            jet.partial(1, 0)
        } else {
            jet.partial(0, 1)
        }
    };
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let gamma: f64 = (0..2)
                .map(|k| 0.5 * z[k] * (d(j, k, i) + d(i, k, j) - d(i, j, k)))
                .sum();
            worst = worst.max(gamma.abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Regular,
    IntrinsicCrossCap,
    DegenerateSingular,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityReport {
    pub p: Point,
    pub lambda_value: f64,
    pub grad_lambda: [f64; 2],
    pub hessian: [[f64; 2]; 2],
    #[serde(rename = "H_lambda")]
    pub h_lambda: f64,
    pub null_dir: [f64; 2],
    pub null_dim: usize,
    pub admissibility_residual: f64,
    #[serde(rename = "Delta")]
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub alpha02: Option<f64>,
    /// `|H_λ − 4EΔ| / (1 + |H_λ|)` in the adjusted chart.
    pub relation_residual: Option<f64>,
    pub classification: Classification,
}

/// Affine change sending the origin to `p` and `∂/∂v` to the null direction,
/// with the first axis scaled to unit length.
pub fn adjusted_chart(m: &MetricField, p: Point) -> Result<AffineChange, SingularityError> {
    let values = m.values(p)?;
    let ns = null_space_of(values);
    if ns.dim != 1 {
        return Err(SingularityError::NoNullSpace(p));
    }
    let [e, _, g] = values;
    let z = ns.dir;
    let first = if z[0].abs() <= z[1].abs() {
        [1.0 / e.sqrt(), 0.0]
    } else {
        [0.0, 1.0 / g.sqrt()]
    };
    Ok(AffineChange {
        linear: [[first[0], z[0]], [first[1], z[1]]],
        translation: p,
    })
}

/// The metric re-expressed in the adjusted chart at `p`.
pub fn adjusted_metric(m: &MetricField, p: Point) -> Result<MetricField, SingularityError> {
    let change = adjusted_chart(m, p)?;
    Ok(m.affine(change, format!("{}@adjusted", m.name)))
}

/// Δ, α, α₀₂ and the relation residual for a metric whose origin is adjusted.
fn adjusted_invariants(adjusted: &MetricField) -> Result<[f64; 4], EvalError> {
    let jets = adjusted.jets([0.0, 0.0], 2)?;
    let (e, f, g) = (&jets.e, &jets.f, &jets.g);
    let (fu, fv) = (f.partial(1, 0), f.partial(0, 1));
    let (guu, guv, gvv) = (g.partial(2, 0), g.partial(1, 1), g.partial(0, 2));
    let e0 = e.value();
    let delta = det3([
        [e0, fu, fv],
        [fu, 0.5 * guu, 0.5 * guv],
        [fv, 0.5 * guv, 0.5 * gvv],
    ]);
    let lambda = jets.lambda();
    let h = lambda.hessian();
    let h_det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let alpha = 0.5 * lambda.partial(0, 2);
    let alpha02 = e0.sqrt() * alpha.powf(1.5) / delta;
    let relation = (h_det - 4.0 * e0 * delta).abs() / (1.0 + h_det.abs());
    Ok([delta, alpha, alpha02, relation])
}

pub fn classify(m: &MetricField, p: Point) -> Result<SingularityReport, SingularityError> {
    let jets = m.jets(p, 2)?;
    let values = jets.values();
    let ns = null_space_of(values);
    if ns.dim == 0 {
        return Err(SingularityError::NoNullSpace(p));
    }
    let lambda = jets.lambda();
    let grad = lambda.grad();
    let hessian = lambda.hessian();
    let h_lambda = hessian[0][0] * hessian[1][1] - hessian[0][1] * hessian[1][0];
    let admissibility = admissibility_residual(m, p)?;

    let (mut delta, mut alpha, mut alpha02, mut relation) = (None, None, None, None);
    if ns.dim == 1 {
        let [d, a, a02, r] = adjusted_invariants(&adjusted_metric(m, p)?)?;
        delta = Some(d);
        alpha = Some(a);
        alpha02 = a02.is_finite().then_some(a02);
        relation = Some(r);
    }

    let scale = 1.0 + values[0].abs() + values[2].abs();
    let tol = CLASSIFY_TOLERANCE * scale;
    let norm2: f64 = hessian.iter().flatten().map(|x| x * x).sum();
    let morse = h_lambda.abs() > HESSIAN_THRESHOLD * (1.0 + norm2);
    let cross_cap = morse
        && lambda.value().abs() < tol
        && grad[0].hypot(grad[1]) < tol
        && ns.dim == 1
        && admissibility < tol;
    Ok(SingularityReport {
        p,
        lambda_value: lambda.value(),
        grad_lambda: grad,
        hessian,
        h_lambda,
        null_dir: ns.dir,
        null_dim: ns.dim,
        admissibility_residual: admissibility,
        delta,
        alpha,
        alpha02,
        relation_residual: relation,
        classification: if cross_cap {
            Classification::IntrinsicCrossCap
        } else {
            Classification::DegenerateSingular
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WestCoefficients {
    pub alpha02: f64,
    pub alpha11: f64,
    pub alpha20: f64,
    pub fit_residual: f64,
}

impl WestCoefficients {
    /// Exact coefficients without a fit.
    pub fn new(alpha02: f64, alpha11: f64, alpha20: f64) -> Self {
        Self {
            alpha02,
            alpha11,
            alpha20,
            fit_residual: 0.0,
        }
    }

    /// Degree-≤2 Taylor coefficients of `(E, F, G)` in the order
    /// `1, u, v, u², uv, v²`.
    pub fn model(&self) -> [[f64; 6]; 3] {
        let (a02, a11, a20) = (self.alpha02, self.alpha11, self.alpha20);
        [
            [1.0, 0.0, 0.0, a20 * a20, 2.0 * a11 * a20, 1.0 + a11 * a11],
            [0.0, 0.0, 0.0, a11 * a20, 1.0 + a11 * a11 + a02 * a20, a02 * a11],
            [0.0, 0.0, 0.0, 1.0 + a11 * a11, 2.0 * a02 * a11, a02 * a02],
        ]
    }
}

fn quadratic_coefficients(j: &crate::jet::Jet2) -> [f64; 6] {
    [
        j.coeff(0, 0),
        j.coeff(1, 0),
        j.coeff(0, 1),
        j.coeff(2, 0),
        j.coeff(1, 1),
        j.coeff(0, 2),
    ]
}

/// Reads `α₀₂, α₁₁, α₂₀` off the quadratic Taylor polynomials of a metric in a
/// West chart at the origin.
pub fn west_extract(m: &MetricField) -> Result<WestCoefficients, SingularityError> {
    let jets = m.jets([0.0, 0.0], 2)?;
    let got = [
        quadratic_coefficients(&jets.e),
        quadratic_coefficients(&jets.f),
        quadratic_coefficients(&jets.g),
    ];
    let g_vv = got[2][5];
    if !(g_vv > 0.0) {
        return Err(SingularityError::NotWestChart {
            fit_residual: f64::INFINITY,
        });
    }
    let alpha02 = g_vv.sqrt();
    let alpha11 = got[2][4] / (2.0 * alpha02);
    let magnitude20 = got[0][3].max(0.0).sqrt();
    let sign_source = if alpha11.abs() > WEST_FIT_TOLERANCE {
        got[0][4] * alpha11
    } else {
        got[1][4] - 1.0 - alpha11 * alpha11
    };
    let alpha20 = if sign_source < 0.0 { -magnitude20 } else { magnitude20 };
    let mut w = WestCoefficients::new(alpha02, alpha11, alpha20);
    let model = w.model();
    w.fit_residual = got
        .iter()
        .flatten()
        .zip(model.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if w.fit_residual > WEST_FIT_TOLERANCE {
        return Err(SingularityError::NotWestChart {
            fit_residual: w.fit_residual,
        });
    }
    Ok(w)
}

/// One singular point together with whatever second-order data could be read.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointAnalysis {
    pub report: SingularityReport,
    pub west: Option<WestCoefficients>,
    pub west_error: Option<String>,
}

/// find → classify → adjusted chart → West coefficients, for every singular point.
pub fn analyze(m: &MetricField) -> Result<Vec<PointAnalysis>, SingularityError> {
    find_singular_points(m)
        .into_iter()
        .map(|p| {
            let report = classify(m, p)?;
            let (west, west_error) = if report.classification == Classification::IntrinsicCrossCap {
                match adjusted_metric(m, p).and_then(|a| west_extract(&a)) {
                    Ok(w) => (Some(w), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            } else {
                (None, None)
            };
            Ok(PointAnalysis {
                report,
                west,
                west_error,
            })
        })
        .collect()
}
