//! Gauss–Bonnet bookkeeping on chart regions that may contain a cross cap.
//!
//! The area integral is taken over a fan of triangles joining a center to the
//! boundary, so a singular center only ever appears at a vertex.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curvature::{geodesic_curvature, limit_at, Curve2, CurvatureError, LimitOptions, LimitStatus, Quantity};
use crate::expr::EvalError;
use crate::metric::{MetricField, Point};
use crate::quadrature::{gauss_legendre, pairwise_sum, scaled_rule};
use crate::singularity::{classify, find_singular_points, Classification, SingularityError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaussBonnetError {
    #[error("boundary is not closed: edge {edge} ends {gap:e} away from the next edge")]
    OpenBoundary { edge: usize, gap: f64 },
    #[error("region has no edges")]
    Empty,
    #[error("at most one singular point per region is supported, found {0}")]
    TooManySingularPoints(usize),
    #[error("singular point ({}, {}) is not an intrinsic cross cap", .0[0], .0[1])]
    Unclassified(Point),
    #[error("region is not star-shaped about ({}, {}) near edge {edge}, t = {t}", .center[0], .center[1])]
    NotStarShaped { center: Point, edge: usize, t: f64 },
    #[error("corner {index} lies at a singular point")]
    CornerAtSingularity { index: usize },
    #[error("degenerate tangent at corner {index}")]
    DegenerateTangent { index: usize },
    #[error("geodesic curvature diverges at edge {edge}, t = {t}")]
    BoundaryDiverges { edge: usize, t: f64 },
    #[error("metric is degenerate inside the region at ({}, {})", .0[0], .0[1])]
    InteriorDegenerate(Point),
    #[error("quadrature did not converge: value {value}, two-level difference {error:e}")]
    NonConvergence { value: f64, error: f64 },
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Singularity(#[from] SingularityError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Closure tolerance between consecutive edges.
pub const CLOSURE_TOLERANCE: f64 = 1e-9;

/// A chart region bounded by a positively oriented closed chain of edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub edges: Vec<Curve2>,
    pub euler_char: i32,
    pub singular_points: Vec<Point>,
    /// Radius of the polar patch around the fan center.
    pub polar_radius: Option<f64>,
}

impl Region {
    pub fn new(name: impl Into<String>, edges: Vec<Curve2>, euler_char: i32) -> Result<Self, GaussBonnetError> {
        if edges.is_empty() {
            return Err(GaussBonnetError::Empty);
        }
        for (i, e) in edges.iter().enumerate() {
            let next = &edges[(i + 1) % edges.len()];
            let a = e.end();
            let b = next.start();
            let gap = (a[0] - b[0]).hypot(a[1] - b[1]);
            if !(gap <= CLOSURE_TOLERANCE) {
                return Err(GaussBonnetError::OpenBoundary { edge: i, gap });
            }
        }
        Ok(Self {
            name: name.into(),
            edges,
            euler_char,
            singular_points: Vec::new(),
            polar_radius: None,
        })
    }

    pub fn with_singular_points(mut self, points: Vec<Point>) -> Self {
        self.singular_points = points;
        self
    }

    pub fn with_polar_radius(mut self, r0: f64) -> Self {
        self.polar_radius = Some(r0);
        self
    }

    /// Adds the singular points of `m` that lie in the closed region.
    pub fn locate_singular_points(self, m: &MetricField) -> Self {
        let inside: Vec<Point> = find_singular_points(m)
            .into_iter()
            .filter(|&p| self.contains(p))
            .collect();
        self.with_singular_points(inside)
    }

    fn boundary_samples(&self, per_edge: usize) -> Vec<Point> {
        self.edges
            .iter()
            .flat_map(|e| {
                (0..per_edge).map(move |k| {
                    let t = e.domain[0] + (e.domain[1] - e.domain[0]) * k as f64 / per_edge as f64;
                    e.point(t)
                })
            })
            .collect()
    }

    /// Closed-region membership by winding number, boundary included.
    pub fn contains(&self, p: Point) -> bool {
        if self
            .edges
            .iter()
            .any(|e| closest_parameter(e, p).1 <= CLOSURE_TOLERANCE)
        {
            return true;
        }
        let poly = self.boundary_samples(512);
        let mut winding = 0.0;
        for i in 0..poly.len() {
            let a = [poly[i][0] - p[0], poly[i][1] - p[1]];
            let q = poly[(i + 1) % poly.len()];
            let b = [q[0] - p[0], q[1] - p[1]];
            winding += (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
        }
        winding.abs() > PI
    }

    /// Fan center: the singular point if there is one, else the mean of
    /// boundary samples.
    pub fn center(&self) -> Point {
        if let Some(&p) = self.singular_points.first() {
            return p;
        }
        let pts = self.boundary_samples(256);
        let n = pts.len() as f64;
        [
            pairwise_sum(&pts.iter().map(|p| p[0]).collect::<Vec<_>>()) / n,
            pairwise_sum(&pts.iter().map(|p| p[1]).collect::<Vec<_>>()) / n,
        ]
    }

    fn default_polar_radius(&self, center: Point) -> f64 {
        let mut nearest = f64::INFINITY;
        for e in &self.edges {
            if closest_parameter(e, center).1 <= CLOSURE_TOLERANCE {
                continue;
            }
            nearest = nearest.min(closest_parameter(e, center).1);
        }
        if nearest.is_finite() {
            0.4 * nearest
        } else {
            0.0
        }
    }
}

/// Parameter of the point of `c` closest to `p`, and its distance.
pub fn closest_parameter(c: &Curve2, p: Point) -> (f64, f64) {
    let [t0, t1] = c.domain;
    let n = 512;
    let dist = |t: f64| {
        let q = c.point(t);
        (q[0] - p[0]).hypot(q[1] - p[1])
    };
    let step = (t1 - t0) / n as f64;
    let best = (0..=n)
        .map(|k| t0 + step * k as f64)
        .map(|t| (t, dist(t)))
        .fold((t0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let (mut a, mut b) = ((best.0 - step).max(t0), (best.0 + step).min(t1));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (dist(x1), dist(x2));
    for _ in 0..120 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = dist(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = dist(x2);
        }
    }
    let (t, d) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if d < best.1 {
        (t, d)
    } else {
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureOptions {
    /// Gauss–Legendre nodes per axis at the coarse level; the fine level doubles it.
    pub nodes: usize,
    /// Accepted two-level difference.
    pub tolerance: f64,
    /// Maximum number of bisections of a parameter panel.
    pub max_depth: usize,
    /// Offset from a singular boundary parameter; the gap is filled with the
    /// one-sided limit.
    pub singular_offset: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            nodes: 32,
            tolerance: 1e-7,
            max_depth: 8,
            singular_offset: 1e-8,
        }
    }
}

impl QuadratureOptions {
    /// Defaults with `32 · 2^refine` coarse nodes.
    pub fn refined(refine: u32) -> Self {
        Self {
            nodes: 32usize << refine.min(4),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

/// `K √(EG − F²)` at a point where the metric is nondegenerate.
pub fn curvature_density(m: &MetricField, p: Point) -> Result<f64, GaussBonnetError> {
    let jets = m.jets(p, 2)?;
    let [e, f, g] = jets.values();
    if !(e * g - f * f > 0.0) {
        return Err(GaussBonnetError::InteriorDegenerate(p));
    }
    Ok(jets.curvature_density())
}

/// Adaptive bisection driver: `panel(a, b, n)` integrates one panel with `n`
/// nodes; the difference between `n` and `2n` nodes decides refinement.
fn adaptive<F>(a: f64, b: f64, opts: &QuadratureOptions, panel: &F) -> Result<Integral, GaussBonnetError>
where
    F: Fn(f64, f64, usize) -> Result<f64, GaussBonnetError> + Sync,
{
    fn go<F>(a: f64, b: f64, depth: usize, share: f64, opts: &QuadratureOptions, panel: &F) -> Result<Integral, GaussBonnetError>
    where
        F: Fn(f64, f64, usize) -> Result<f64, GaussBonnetError> + Sync,
    {
        let coarse = panel(a, b, opts.nodes)?;
        let fine = panel(a, b, 2 * opts.nodes)?;
        let err = (fine - coarse).abs();
        if err <= opts.tolerance * share || depth >= opts.max_depth {
            return Ok(Integral {
                value: fine,
                error_estimate: err,
            });
        }
        let mid = 0.5 * (a + b);
        let left = go(a, mid, depth + 1, 0.5 * share, opts, panel)?;
        let right = go(mid, b, depth + 1, 0.5 * share, opts, panel)?;
        Ok(Integral {
            value: left.value + right.value,
            error_estimate: left.error_estimate + right.error_estimate,
        })
    }
    go(a, b, 0, 1.0, opts, panel)
}

fn accumulate(parts: &[Integral]) -> Integral {
    Integral {
        value: pairwise_sum(&parts.iter().map(|x| x.value).collect::<Vec<_>>()),
        error_estimate: pairwise_sum(&parts.iter().map(|x| x.error_estimate).collect::<Vec<_>>()),
    }
}

fn check_singular_points(m: &MetricField, reg: &Region) -> Result<(), GaussBonnetError> {
    if reg.singular_points.len() > 1 {
        return Err(GaussBonnetError::TooManySingularPoints(reg.singular_points.len()));
    }
    for &p in &reg.singular_points {
        if classify(m, p)?.classification != Classification::IntrinsicCrossCap {
            return Err(GaussBonnetError::Unclassified(p));
        }
    }
    Ok(())
}

/// `∫ K dA` over the region.
///
/// Each edge spans a fan `c + s (γ(t) − c)`, `s ∈ [0, 1]`, whose Jacobian is
/// `s · det(γ − c, γ')`. The `s`-range is split at the polar radius so the
/// patch around the center is integrated separately.
pub fn integrate_curvature(m: &MetricField, reg: &Region, opts: &QuadratureOptions) -> Result<Integral, GaussBonnetError> {
    check_singular_points(m, reg)?;
    let c = reg.center();
    let r0 = reg.polar_radius.unwrap_or_else(|| reg.default_polar_radius(c));
    let mut parts = Vec::with_capacity(reg.edges.len());
    for (index, edge) in reg.edges.iter().enumerate() {
        let fan = |t: f64, n: usize| -> Result<f64, GaussBonnetError> {
            let q = edge.point(t);
            let d = edge.velocity(t)?;
            let r = [q[0] - c[0], q[1] - c[1]];
            let jac = r[0] * d[1] - r[1] * d[0];
            let scale = r[0].hypot(r[1]) * d[0].hypot(d[1]);
            if jac < -1e-9 * scale {
                return Err(GaussBonnetError::NotStarShaped { center: c, edge: index, t });
            }
            if jac <= 0.0 {
                return Ok(0.0);
            }
            let len = r[0].hypot(r[1]);
            let s0 = if r0 > 0.0 { (r0 / len).min(1.0) } else { 1.0 };
            let rule = gauss_legendre(n);
            let mut total = 0.0;
            for (a, b) in [(0.0, s0), (s0, 1.0)] {
                if b <= a {
                    continue;
                }
                let mut terms = Vec::with_capacity(n);
                for (s, w) in scaled_rule(&rule, a, b) {
                    let p = [c[0] + s * r[0], c[1] + s * r[1]];
                    terms.push(w * s * curvature_density(m, p)?);
                }
                total += pairwise_sum(&terms);
            }
            Ok(total * jac)
        };
        let panel = |a: f64, b: f64, n: usize| -> Result<f64, GaussBonnetError> {
            let rule = gauss_legendre(n);
            let nodes = scaled_rule(&rule, a, b);
            let terms = nodes
                .par_iter()
                .map(|&(t, w)| fan(t, n).map(|v| w * v))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(pairwise_sum(&terms))
        };
        parts.push(adaptive(edge.domain[0], edge.domain[1], opts, &panel)?);
    }
    let total = accumulate(&parts);
    if !(total.error_estimate <= opts.tolerance * (1.0 + total.value.abs())) {
        return Err(GaussBonnetError::NonConvergence {
            value: total.value,
            error: total.error_estimate,
        });
    }
    Ok(total)
}

/// Parameters of `edge` that hit one of the region's singular points.
fn singular_parameters(edge: &Curve2, points: &[Point]) -> Vec<f64> {
    let mut ts: Vec<f64> = points
        .iter()
        .map(|&p| closest_parameter(edge, p))
        .filter(|&(_, d)| d <= CLOSURE_TOLERANCE)
        .map(|(t, _)| t)
        .collect();
    ts.sort_by(f64::total_cmp);
    ts
}

/// `∫ κ_g ds` along the boundary, integrating the continuous density
/// `κ_g ds/dt` through any singular parameter.
pub fn integrate_boundary(m: &MetricField, reg: &Region, opts: &QuadratureOptions) -> Result<Integral, GaussBonnetError> {
    let mut parts = Vec::new();
    for (index, edge) in reg.edges.iter().enumerate() {
        let [t0, t1] = edge.domain;
        let cuts = singular_parameters(edge, &reg.singular_points);
        let mut knots = vec![(t0, false)];
        knots.extend(cuts.iter().map(|&t| (t, true)));
        knots.push((t1, false));
        knots.dedup_by(|b, a| (a.0 - b.0).abs() < 1e-12 && {
            a.1 |= b.1;
            true
        });
        let panel = |a: f64, b: f64, n: usize| -> Result<f64, GaussBonnetError> {
            let rule = gauss_legendre(n);
            let terms = scaled_rule(&rule, a, b)
                .par_iter()
                .map(|&(t, w)| geodesic_curvature(m, edge, t).map(|s| w * s.kappa_ds_dt))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(pairwise_sum(&terms))
        };
        for pair in knots.windows(2) {
            let (mut a, sa) = pair[0];
            let (mut b, sb) = pair[1];
            let mut gap = 0.0;
            for (t_star, side, singular) in [(a, 1.0, sa), (b, -1.0, sb)] {
                if !singular {
                    continue;
                }
                let limit = limit_at(
                    m,
                    edge,
                    t_star,
                    side,
                    Quantity::KappaDs,
                    &LimitOptions {
                        start_step: Some((0.25 * (b - a)).min(0.25)),
                        ..LimitOptions::default()
                    },
                )?;
                if limit.status == LimitStatus::Diverges || !limit.value.is_finite() {
                    return Err(GaussBonnetError::BoundaryDiverges { edge: index, t: t_star });
                }
                gap += opts.singular_offset * limit.value;
            }
            if sa {
                a += opts.singular_offset;
            }
            if sb {
                b -= opts.singular_offset;
            }
            let mut piece = adaptive(a, b, opts, &panel)?;
            piece.value += gap;
            parts.push(piece);
        }
    }
    let total = accumulate(&parts);
    if !(total.error_estimate <= opts.tolerance * (1.0 + total.value.abs())) {
        return Err(GaussBonnetError::NonConvergence {
            value: total.value,
            error: total.error_estimate,
        });
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerAngle {
    /// Junction between edge `index` and the next edge.
    pub index: usize,
    pub point: Point,
    pub interior_angle: f64,
    /// Turning angle `π − interior_angle`.
    pub exterior_angle: f64,
}

/// Interior angles at every junction of consecutive edges, measured with the
/// metric; a smooth junction has interior angle `π`.
pub fn corner_angles(m: &MetricField, reg: &Region) -> Result<Vec<CornerAngle>, GaussBonnetError> {
    let n = reg.edges.len();
    (0..n)
        .map(|index| {
            let incoming = &reg.edges[index];
            let outgoing = &reg.edges[(index + 1) % n];
            let p = incoming.end();
            let a = incoming.velocity(incoming.domain[1])?;
            let b = outgoing.velocity(outgoing.domain[0])?;
            let [e, f, g] = m.values(p)?;
            let lambda = e * g - f * f;
            if !(lambda > MetricField::regularity_threshold(e, g)) {
                return Err(GaussBonnetError::CornerAtSingularity { index });
            }
            let dot = e * a[0] * b[0] + f * (a[0] * b[1] + a[1] * b[0]) + g * a[1] * b[1];
            let cross = lambda.sqrt() * (a[0] * b[1] - a[1] * b[0]);
            if dot == 0.0 && cross == 0.0 {
                return Err(GaussBonnetError::DegenerateTangent { index });
            }
            let exterior = cross.atan2(dot);
            Ok(CornerAngle {
                index,
                point: p,
                interior_angle: PI - exterior,
                exterior_angle: exterior,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GBReport {
    pub interior_integral: f64,
    pub boundary_integral: f64,
    /// `Σ (π − ∠P)` over the corners.
    pub corner_defect: f64,
    pub total: f64,
    /// `2π χ`.
    pub target: f64,
    pub residual: f64,
    pub quadrature_error: f64,
    pub interior_error: f64,
    pub boundary_error: f64,
    pub corners: Vec<CornerAngle>,
}

pub fn gauss_bonnet_check(m: &MetricField, reg: &Region, opts: &QuadratureOptions) -> Result<GBReport, GaussBonnetError> {
    let interior = integrate_curvature(m, reg, opts)?;
    let boundary = integrate_boundary(m, reg, opts)?;
    let corners = corner_angles(m, reg)?;
    let corner_defect = pairwise_sum(&corners.iter().map(|c| c.exterior_angle).collect::<Vec<_>>());
    let total = interior.value + boundary.value + corner_defect;
    let target = 2.0 * PI * reg.euler_char as f64;
    Ok(GBReport {
        interior_integral: interior.value,
        boundary_integral: boundary.value,
        corner_defect,
        total,
        target,
        residual: (total - target).abs(),
        quadrature_error: interior.error_estimate + boundary.error_estimate,
        interior_error: interior.error_estimate,
        boundary_error: boundary.error_estimate,
        corners,
    })
}

/// Circle `center + r (cos t, sin t)`, `t ∈ [0, 2π]`.
pub fn circle(name: &str, center: Point, r: f64) -> Curve2 {
    Curve2::parse(
        name,
        &format!("({:?}) + ({:?})*cos(t)", center[0], r),
        &format!("({:?}) + ({:?})*sin(t)", center[1], r),
        [0.0, 2.0 * PI],
    )
    .expect("generated curve parses")
}

/// Disc of radius `r` as a one-edge region with `χ = 1`.
pub fn disc(center: Point, r: f64) -> Region {
    Region::new("disc", vec![circle("circle", center, r)], 1).expect("a circle is closed")
}

/// Half-disc `{|x| ≤ r, ±v ≥ 0}` about the origin: an arc followed by the diameter.
pub fn half_disc(r: f64, upper: bool) -> Region {
    let (arc, diameter) = if upper {
        (
            Curve2::parse("arc", &format!("({r:?})*cos(t)"), &format!("({r:?})*sin(t)"), [0.0, PI]),
            Curve2::parse("diameter", "t", "0", [-r, r]),
        )
    } else {
        (
            Curve2::parse("arc", &format!("({r:?})*cos(t)"), &format!("({r:?})*sin(t)"), [PI, 2.0 * PI]),
            Curve2::parse("diameter", "-t", "0", [-r, r]),
        )
    };
    Region::new(
        if upper { "upper half-disc" } else { "lower half-disc" },
        vec![arc.expect("static"), diameter.expect("static")],
        1,
    )
    .expect("half-disc closes")
}
