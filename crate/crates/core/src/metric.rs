//! Positive semi-definite metrics `E du² + 2F du dv + G dv²` on a single chart.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, EvalError, Expr, ParseError, VarSet};
use crate::jet::{Jet, Jet2};

pub type Point = [f64; 2];

/// Relative guard on `EG - F²` for Christoffel symbols and Gaussian curvature.
pub const REGULARITY_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("metric is degenerate at ({}, {}): EG - F² = {lambda:e}", .point[0], .point[1])]
    Degenerate { point: Point, lambda: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartBox {
    pub u: [f64; 2],
    pub v: [f64; 2],
}

impl ChartBox {
    pub fn new(u: [f64; 2], v: [f64; 2]) -> Option<Self> {
        let ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        (ok(u) && ok(v)).then_some(Self { u, v })
    }

    pub fn square(half_width: f64) -> Self {
        Self {
            u: [-half_width, half_width],
            v: [-half_width, half_width],
        }
    }

    pub fn contains(&self, p: Point, slack: f64) -> bool {
        p[0] >= self.u[0] - slack
            && p[0] <= self.u[1] + slack
            && p[1] >= self.v[0] - slack
            && p[1] <= self.v[1] + slack
    }

    pub fn width(&self) -> f64 {
        self.u[1] - self.u[0]
    }

    pub fn height(&self) -> f64 {
        self.v[1] - self.v[0]
    }

    /// `n × n` grid including the box corners.
    pub fn grid(&self, n: usize) -> Vec<Point> {
        let n = n.max(2);
        let step = |r: [f64; 2], k: usize| r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64;
        (0..n)
            .flat_map(|i| (0..n).map(move |j| [step(self.u, i), step(self.v, j)]))
            .collect()
    }
}

/// A map `(u, v, 0) -> (x, y, z)`, possibly singular.
#[derive(Debug, Clone, PartialEq)]
pub struct Immersion3 {
    pub x: Expr,
    pub y: Expr,
    pub z: Expr,
    pub chart: ChartBox,
}

impl Immersion3 {
    pub fn parse(x: &str, y: &str, z: &str, chart: ChartBox) -> Result<Self, ParseError> {
        Ok(Self {
            x: parse(x, VarSet::Surface)?,
            y: parse(y, VarSet::Surface)?,
            z: parse(z, VarSet::Surface)?,
            chart,
        })
    }

    pub fn jets(&self, p: Point, order: usize) -> Result<[Jet2; 3], EvalError> {
        Ok([
            self.x.eval_jet2(p, order)?,
            self.y.eval_jet2(p, order)?,
            self.z.eval_jet2(p, order)?,
        ])
    }

    pub fn eval(&self, p: Point) -> [f64; 3] {
        let vals = [p[0], p[1], 0.0];
        [self.x.eval_scalar(vals), self.y.eval_scalar(vals), self.z.eval_scalar(vals)]
    }
}

/// `x = translation + linear · y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineChange {
    pub linear: [[f64; 2]; 2],
    pub translation: Point,
}

impl AffineChange {
    pub fn identity() -> Self {
        Self {
            linear: [[1.0, 0.0], [0.0, 1.0]],
            translation: [0.0, 0.0],
        }
    }

    pub fn det(&self) -> f64 {
        let a = self.linear;
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    pub fn apply(&self, y: Point) -> Point {
        let a = self.linear;
        [
            self.translation[0] + a[0][0] * y[0] + a[0][1] * y[1],
            self.translation[1] + a[1][0] * y[0] + a[1][1] * y[1],
        ]
    }

    pub fn invert(&self, x: Point) -> Point {
        let a = self.linear;
        let det = self.det();
        let d = [x[0] - self.translation[0], x[1] - self.translation[1]];
        [
            (a[1][1] * d[0] - a[0][1] * d[1]) / det,
            (-a[1][0] * d[0] + a[0][0] * d[1]) / det,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
enum MetricSource {
    Coefficients { e: Expr, f: Expr, g: Expr },
    Pullback(Immersion3),
    Affine {
        inner: Box<MetricField>,
        change: AffineChange,
    },
}

/// Jets of `E`, `F`, `G` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricJets {
    pub e: Jet2,
    pub f: Jet2,
    pub g: Jet2,
}

impl MetricJets {
    /// Jet of `λ = EG - F²`.
    pub fn lambda(&self) -> Jet2 {
        &self.e * &self.g - &self.f * &self.f
    }

    pub fn values(&self) -> [f64; 3] {
        [self.e.value(), self.f.value(), self.g.value()]
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let [e, f, g] = self.values();
        [[e, f], [f, g]]
    }

    /// Jet of the `(i, j)` metric entry, indices in `{0, 1}`.
    pub fn entry(&self, i: usize, j: usize) -> &Jet2 {
        match (i, j) {
            (0, 0) => &self.e,
            (1, 1) => &self.g,
            _ => &self.f,
        }
    }

    /// Metric inner product of two chart vectors at the base point.
    pub fn inner(&self, a: Point, b: Point) -> f64 {
        let [e, f, g] = self.values();
        e * a[0] * b[0] + f * (a[0] * b[1] + a[1] * b[0]) + g * a[1] * b[1]
    }

    /// Numerator of the Brioschi formula, `K · (EG - F²)²`. Needs order ≥ 2.
    pub fn brioschi_numerator(&self) -> f64 {
        let (e, f, g) = (&self.e, &self.f, &self.g);
        let (e0, f0, g0) = (e.value(), f.value(), g.value());
        let (eu, ev) = (e.partial(1, 0), e.partial(0, 1));
        let (fu, fv) = (f.partial(1, 0), f.partial(0, 1));
        let (gu, gv) = (g.partial(1, 0), g.partial(0, 1));
        let (evv, fuv, guu) = (e.partial(0, 2), f.partial(1, 1), g.partial(2, 0));
        let first = det3([
            [-0.5 * evv + fuv - 0.5 * guu, 0.5 * eu, fu - 0.5 * ev],
            [fv - 0.5 * gu, e0, f0],
            [0.5 * gv, f0, g0],
        ]);
        let second = det3([[0.0, 0.5 * ev, 0.5 * gu], [0.5 * ev, e0, f0], [0.5 * gu, f0, g0]]);
        first - second
    }

    /// `K √(EG - F²)`, the area density of the curvature form. Requires `λ > 0`.
    pub fn curvature_density(&self) -> f64 {
        let [e, f, g] = self.values();
        let lambda = e * g - f * f;
        self.brioschi_numerator() / (lambda * lambda.sqrt())
    }
}

pub(crate) fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Christoffel symbols of the second kind at a regular point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChristoffelAt {
    pub p: Point,
    /// `Γ¹₁₁`
    pub g1_11: f64,
    /// `Γ²₁₁`
    pub g2_11: f64,
    /// `Γ¹₁₂ = Γ¹₂₁`
    pub g1_12: f64,
    /// `Γ²₁₂ = Γ²₂₁`
    pub g2_12: f64,
    /// `Γ¹₂₂`
    pub g1_22: f64,
    /// `Γ²₂₂`
    pub g2_22: f64,
}

impl ChristoffelAt {
    /// `Γᵏᵢⱼ` with zero-based indices.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        match (k, i.min(j), i.max(j)) {
            (0, 0, 0) => self.g1_11,
            (1, 0, 0) => self.g2_11,
            (0, 0, 1) => self.g1_12,
            (1, 0, 1) => self.g2_12,
            (0, 1, 1) => self.g1_22,
            (1, 1, 1) => self.g2_22,
            _ => panic!("Christoffel index out of range"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    pub name: String,
    pub chart: ChartBox,
    source: MetricSource,
}

impl MetricField {
    pub fn from_coefficients(name: impl Into<String>, e: Expr, f: Expr, g: Expr, chart: ChartBox) -> Self {
        Self {
            name: name.into(),
            chart,
            source: MetricSource::Coefficients { e, f, g },
        }
    }

    pub fn parse_coefficients(
        name: impl Into<String>,
        e: &str,
        f: &str,
        g: &str,
        chart: ChartBox,
    ) -> Result<Self, ParseError> {
        Ok(Self::from_coefficients(
            name,
            parse(e, VarSet::Surface)?,
            parse(f, VarSet::Surface)?,
            parse(g, VarSet::Surface)?,
            chart,
        ))
    }

    /// First fundamental form `df · df` of an immersion.
    pub fn pullback(name: impl Into<String>, im: Immersion3) -> Self {
        Self {
            name: name.into(),
            chart: im.chart,
            source: MetricSource::Pullback(im),
        }
    }

    /// The same metric expressed in coordinates `y` with `x = change(y)`.
    pub fn affine(&self, change: AffineChange, name: impl Into<String>) -> Self {
        let corners = [
            [self.chart.u[0], self.chart.v[0]],
            [self.chart.u[1], self.chart.v[0]],
            [self.chart.u[0], self.chart.v[1]],
            [self.chart.u[1], self.chart.v[1]],
        ]
        .map(|x| change.invert(x));
        let lo = |k: usize| corners.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min);
        let hi = |k: usize| corners.iter().map(|c| c[k]).fold(f64::NEG_INFINITY, f64::max);
        Self {
            name: name.into(),
            chart: ChartBox {
                u: [lo(0), hi(0)],
                v: [lo(1), hi(1)],
            },
            source: MetricSource::Affine {
                inner: Box::new(self.clone()),
                change,
            },
        }
    }

    pub fn immersion(&self) -> Option<&Immersion3> {
        match &self.source {
            MetricSource::Pullback(im) => Some(im),
            _ => None,
        }
    }

    /// Jets of `E`, `F`, `G` at `p`, truncated at `order`.
    pub fn jets(&self, p: Point, order: usize) -> Result<MetricJets, EvalError> {
        match &self.source {
            MetricSource::Coefficients { e, f, g } => Ok(MetricJets {
                e: e.eval_jet2(p, order)?,
                f: f.eval_jet2(p, order)?,
                g: g.eval_jet2(p, order)?,
            }),
            MetricSource::Pullback(im) => {
                let [x, y, z] = im.jets(p, order + 1)?;
                let du = [x.d_du(), y.d_du(), z.d_du()];
                let dv = [x.d_dv(), y.d_dv(), z.d_dv()];
                let dot = |a: &[Jet2; 3], b: &[Jet2; 3]| &(&(&a[0] * &b[0]) + &(&a[1] * &b[1])) + &(&a[2] * &b[2]);
                Ok(MetricJets {
                    e: dot(&du, &du),
                    f: dot(&du, &dv),
                    g: dot(&dv, &dv),
                })
            }
            MetricSource::Affine { inner, change } => {
                let x = change.apply(p);
                let g = inner.jets(x, order)?;
                let a = change.linear;
                let e = g.e.compose_linear(a, p);
                let f = g.f.compose_linear(a, p);
                let gg = g.g.compose_linear(a, p);
                // g' = Aᵀ g A
                let entry = |c0: [f64; 2], c1: [f64; 2]| {
                    &(&(&e * (c0[0] * c1[0])) + &(&f * (c0[0] * c1[1] + c0[1] * c1[0]))) + &(&gg * (c0[1] * c1[1]))
                };
                let col0 = [a[0][0], a[1][0]];
                let col1 = [a[0][1], a[1][1]];
                Ok(MetricJets {
                    e: entry(col0, col0),
                    f: entry(col0, col1),
                    g: entry(col1, col1),
                })
            }
        }
    }

    /// `(E, F, G)` at `p`.
    pub fn values(&self, p: Point) -> Result<[f64; 3], EvalError> {
        Ok(self.jets(p, 0)?.values())
    }

    /// Jet of `λ = EG - F²` at `p`.
    pub fn lambda_jet(&self, p: Point, order: usize) -> Result<Jet2, EvalError> {
        Ok(self.jets(p, order)?.lambda())
    }

    pub fn lambda(&self, p: Point) -> Result<f64, EvalError> {
        let [e, f, g] = self.values(p)?;
        Ok(e * g - f * f)
    }

    pub fn regularity_threshold(e: f64, g: f64) -> f64 {
        REGULARITY_EPSILON * (1.0 + e.abs() + g.abs())
    }

    fn ensure_regular(p: Point, jets: &MetricJets) -> Result<f64, MetricError> {
        let [e, f, g] = jets.values();
        let lambda = e * g - f * f;
        if lambda <= Self::regularity_threshold(e, g) {
            return Err(MetricError::Degenerate { point: p, lambda });
        }
        Ok(lambda)
    }

    pub fn christoffel(&self, p: Point) -> Result<ChristoffelAt, MetricError> {
        let jets = self.jets(p, 1)?;
        let lambda = Self::ensure_regular(p, &jets)?;
        Ok(christoffel_from_jets(p, &jets, lambda))
    }

    /// Intrinsic Gaussian curvature by the Brioschi formula.
    pub fn gaussian_curvature(&self, p: Point) -> Result<f64, MetricError> {
        let jets = self.jets(p, 2)?;
        let lambda = Self::ensure_regular(p, &jets)?;
        Ok(jets.brioschi_numerator() / (lambda * lambda))
    }
}

pub(crate) fn christoffel_from_jets(p: Point, jets: &MetricJets, lambda: f64) -> ChristoffelAt {
    let [e, f, g] = jets.values();
    let (eu, ev) = (jets.e.partial(1, 0), jets.e.partial(0, 1));
    let (fu, fv) = (jets.f.partial(1, 0), jets.f.partial(0, 1));
    let (gu, gv) = (jets.g.partial(1, 0), jets.g.partial(0, 1));
    let d = 2.0 * lambda;
    ChristoffelAt {
        p,
        g1_11: (g * eu - 2.0 * f * fu + f * ev) / d,
        g2_11: (2.0 * e * fu - e * ev - f * eu) / d,
        g1_12: (g * ev - f * gu) / d,
        g2_12: (e * gu - f * ev) / d,
        g1_22: (2.0 * g * fv - g * gu - f * gv) / d,
        g2_22: (e * gv - 2.0 * f * fv + f * gu) / d,
    }
}

/// Free-function form of [`MetricField::pullback`].
pub fn pullback(name: impl Into<String>, im: Immersion3) -> MetricField {
    MetricField::pullback(name, im)
}
