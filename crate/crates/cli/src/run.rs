//! Task execution. Each runner returns the documents it produced; the caller
//! decides where they go.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;
use whitney_core::curvature::{
    approach_of, boundedness_predicate, compare_series_with_order, geodesic_curvature, limit_at_singularity,
    series_at_start, Approach, CompareReport, Curve2, CurvatureError, CurvatureSample, LimitEstimate, LimitStatus,
    Quantity, SeriesExpansion,
};
use whitney_core::expr::{BinOp, Expr};
use whitney_core::gaussbonnet::{gauss_bonnet_check, GBReport, GaussBonnetError, QuadratureOptions};
use whitney_core::jet::DEFAULT_ORDER;
use whitney_core::metric::{AffineChange, MetricField, Point};
use whitney_core::quadrature::pairwise_sum;
use whitney_core::report::{format_float, to_json};
use whitney_core::singularity::{
    adjusted_chart, adjusted_metric, analyze, classify, find_singular_points, Classification, PointAnalysis,
    SingularityError, WestCoefficients,
};
use whitney_core::verify::{run_verify, VerifyReport};

use crate::config::{AnalyzeTask, Config, ConfigError, CurveTask, GaussBonnetTask, Task, DEFAULT_SAMPLES};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("verification failed: {failed} of {total} checks")]
    VerifyFailed { failed: usize, total: usize },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::VerifyFailed { .. } => 1,
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

fn invariant(context: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Invariant(format!("{context}: {e}"))
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    to_json(value).map_err(|e| invariant("serialization", e))
}

/// Overrides given on the command line; they win over task parameters.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub jet_order: Option<usize>,
    pub refine: Option<u32>,
}

/// A file produced by a task, with its path relative to the working directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: PathBuf,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct Output {
    /// Main report document.
    pub document: String,
    pub artifacts: Vec<Artifact>,
    /// Set when the document was produced but some quantity failed to settle.
    pub non_convergence: Option<String>,
}

impl Output {
    fn document(document: String) -> Self {
        Self {
            document,
            artifacts: Vec::new(),
            non_convergence: None,
        }
    }
}

fn surface<'a>(cfg: &'a Config, name: &str) -> &'a MetricField {
    &cfg.surfaces[name]
}

#[derive(Serialize)]
struct AnalyzeEntry<'a> {
    surface: &'a str,
    singular_points: Vec<PointAnalysis>,
}

#[derive(Serialize)]
struct AnalyzeDocument<'a> {
    analyze: Vec<AnalyzeEntry<'a>>,
}

pub fn run_analyze(cfg: &Config) -> Result<Output, CliError> {
    let mut tasks: Vec<AnalyzeTask> = cfg
        .tasks
        .iter()
        .filter_map(|t| match t {
            Task::Analyze(a) => Some(a.clone()),
            _ => None,
        })
        .collect();
    if tasks.is_empty() {
        tasks = cfg.surfaces.keys().map(|s| AnalyzeTask { surface: s.clone() }).collect();
    }
    let mut entries = Vec::with_capacity(tasks.len());
    for t in &tasks {
        let name = cfg.surfaces.get_key_value(&t.surface).expect("resolved").0;
        let points = analyze(surface(cfg, name)).map_err(|e| invariant(&format!("surface `{name}`"), e))?;
        entries.push(AnalyzeEntry {
            surface: name,
            singular_points: points,
        });
    }
    Ok(Output::document(json(&AnalyzeDocument { analyze: entries })?))
}

/// `t,speed2,kappa_g,ds_dt,kappa_ds_dt` rows; samples where the curvature is
/// undefined are written as `NaN`.
pub fn curve_csv(m: &MetricField, c: &Curve2, range: [f64; 2], samples: usize) -> String {
    let mut out = String::from("t,speed2,kappa_g,ds_dt,kappa_ds_dt\n");
    for i in 0..samples {
        let t = if i + 1 == samples {
            range[1]
        } else {
            range[0] + (range[1] - range[0]) * i as f64 / (samples - 1) as f64
        };
        let s = geodesic_curvature(m, c, t).unwrap_or(CurvatureSample {
            t,
            speed2: f64::NAN,
            kappa_g: f64::NAN,
            ds_dt: f64::NAN,
            kappa_ds_dt: f64::NAN,
        });
        let row = [s.t, s.speed2, s.kappa_g, s.ds_dt, s.kappa_ds_dt].map(format_float).join(",");
        out.push_str(&row);
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Limits {
    kappa_g: LimitEstimate,
    kappa_ds: LimitEstimate,
}

#[derive(Serialize)]
struct SeriesSummary {
    jet_order: usize,
    expansion: Option<SeriesExpansion>,
    error: Option<String>,
}

#[derive(Serialize)]
struct CurveSummary<'a> {
    curve: &'a str,
    surface: &'a str,
    csv: Option<String>,
    samples: usize,
    undefined_samples: usize,
    singular_point: Option<Point>,
    approach: Option<Approach>,
    limits: Option<Limits>,
    series: Option<SeriesSummary>,
    west: Option<WestCoefficients>,
    /// Sign of the determinant of the change into the West chart.
    west_chart_orientation: Option<f64>,
    boundedness_predicate: Option<bool>,
    compare_series: Option<CompareReport>,
    compare_skipped: Option<String>,
}

#[derive(Serialize)]
struct CurveDocument<'a> {
    curves: Vec<CurveSummary<'a>>,
}

fn csv_path(task: &CurveTask, out: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = &task.csv {
        return Some(PathBuf::from(p));
    }
    let out = out?;
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Some(out.with_file_name(format!("{stem}.{}.csv", task.curve)))
}

fn num(x: f64) -> Expr {
    Expr::num(x)
}

/// The curve in coordinates `y` with `x = change(y)`.
fn pull_curve(c: &Curve2, change: &AffineChange) -> Result<Curve2, CurvatureError> {
    let [[a, b], [cc, d]] = change.linear;
    let det = a * d - b * cc;
    let inv = [[d / det, -b / det], [-cc / det, a / det]];
    let du = Expr::binary(BinOp::Sub, c.u.clone(), num(change.translation[0]));
    let dv = Expr::binary(BinOp::Sub, c.v.clone(), num(change.translation[1]));
    let row = |r: [f64; 2]| {
        Expr::binary(
            BinOp::Add,
            Expr::binary(BinOp::Mul, num(r[0]), du.clone()),
            Expr::binary(BinOp::Mul, num(r[1]), dv.clone()),
        )
    };
    let mut out = Curve2::new(c.name.clone(), row(inv[0]), row(inv[1]), c.domain)?;
    out.reversed = c.reversed;
    Ok(out)
}

fn is_identity(change: &AffineChange) -> bool {
    change.linear == [[1.0, 0.0], [0.0, 1.0]] && change.translation == [0.0, 0.0]
}

/// Whether a West-chart curve has the `(u(t), t − t₀)` shape the tangential
/// closed forms are written for.
fn unit_speed_in_v(c: &Curve2) -> Result<bool, CurvatureError> {
    let (_, v) = c.jets(c.domain[0], 4)?;
    let tol = 1e-10;
    Ok(v.coeff(0).abs() < tol && (v.coeff(1) - 1.0).abs() < tol && (2..=4).all(|k| v.coeff(k).abs() < tol))
}

fn curvature_failure(context: &str, e: CurvatureError) -> CliError {
    invariant(context, e)
}

/// Distance within which a located singular point is taken to be the curve start.
const START_MATCH: f64 = 1e-8;

/// The curve start, when a singular point of `m` sits there.
fn singular_start(m: &MetricField, c: &Curve2) -> Option<Point> {
    let start = c.start();
    find_singular_points(m)
        .into_iter()
        .any(|p| (p[0] - start[0]).hypot(p[1] - start[1]) <= START_MATCH)
        .then_some(start)
}

fn run_curve_task<'a>(
    cfg: &'a Config,
    index: Option<usize>,
    task: &'a CurveTask,
    jet_order: usize,
    out: Option<&Path>,
) -> Result<(CurveSummary<'a>, Option<Artifact>, Option<String>), CliError> {
    let entry = &cfg.curves[&task.curve];
    let m = surface(cfg, &entry.surface);
    let c = &entry.curve;
    let context = format!("curve `{}`", task.curve);
    let csv = curve_csv(m, c, task.range, task.samples);
    let undefined = csv.lines().skip(1).filter(|l| l.contains("NaN")).count();
    let artifact = csv_path(task, out).map(|path| Artifact { path, contents: csv });

    let mut summary = CurveSummary {
        curve: &task.curve,
        surface: &entry.surface,
        csv: artifact.as_ref().map(|a| a.path.to_string_lossy().into_owned()),
        samples: task.samples,
        undefined_samples: undefined,
        singular_point: None,
        approach: None,
        limits: None,
        series: None,
        west: None,
        west_chart_orientation: None,
        boundedness_predicate: None,
        compare_series: None,
        compare_skipped: None,
    };

    let p = singular_start(m, c);
    let want_limits = task.limits.unwrap_or(p.is_some());
    if !want_limits {
        return Ok((summary, artifact, None));
    }
    let Some(p) = p else {
        let path = match index {
            Some(i) => format!("tasks[{i}].curve.limits"),
            None => format!("curves.{}", task.curve),
        };
        return Err(ConfigError::new(path, "limits requested but the curve does not start at a singular point").into());
    };
    summary.singular_point = Some(p);
    summary.approach = Some(approach_of(m, c).map_err(|e| curvature_failure(&context, e))?);

    let kappa_g = limit_at_singularity(m, c, Quantity::KappaG).map_err(|e| curvature_failure(&context, e))?;
    let kappa_ds = limit_at_singularity(m, c, Quantity::KappaDs).map_err(|e| curvature_failure(&context, e))?;
    let unresolved = [&kappa_g, &kappa_ds]
        .iter()
        .filter(|l| l.status == LimitStatus::Unresolved)
        .map(|l| format!("{context}: {:?} limit unresolved (error {:e})", l.quantity, l.error_estimate))
        .next();
    summary.limits = Some(Limits { kappa_g, kappa_ds });

    summary.series = Some(match series_at_start(m, c, jet_order) {
        Ok(s) => SeriesSummary {
            jet_order,
            expansion: Some(s),
            error: None,
        },
        Err(e) => SeriesSummary {
            jet_order,
            expansion: None,
            error: Some(e.to_string()),
        },
    });

    let report = classify(m, p).map_err(|e| invariant(&context, e))?;
    if report.classification != Classification::IntrinsicCrossCap {
        summary.compare_skipped = Some("start point is not an intrinsic cross cap".into());
        return Ok((summary, artifact, unresolved));
    }
    let change = adjusted_chart(m, p).map_err(|e| invariant(&context, e))?;
    let (west_metric, west_curve) = if is_identity(&change) {
        (m.clone(), c.clone())
    } else {
        let wm = adjusted_metric(m, p).map_err(|e| invariant(&context, e))?;
        let wc = pull_curve(c, &change).map_err(|e| curvature_failure(&context, e))?;
        (wm, wc)
    };
    summary.west_chart_orientation = Some(change.det().signum());
    let w = match whitney_core::singularity::west_extract(&west_metric) {
        Ok(w) => w,
        Err(SingularityError::NotWestChart { fit_residual }) => {
            summary.compare_skipped = Some(format!(
                "adjusted chart is not a West chart (fit residual {})",
                format_float(fit_residual)
            ));
            return Ok((summary, artifact, unresolved));
        }
        Err(e) => return Err(invariant(&context, e)),
    };
    summary.west = Some(w);
    let approach = approach_of(&west_metric, &west_curve).map_err(|e| curvature_failure(&context, e))?;
    if approach == Approach::Tangential {
        if !unit_speed_in_v(&west_curve).map_err(|e| curvature_failure(&context, e))? {
            summary.compare_skipped =
                Some("tangential closed forms need the curve as (u(t), t - t0) in the West chart".into());
            return Ok((summary, artifact, unresolved));
        }
        let (u, _) = west_curve.jets(west_curve.domain[0], 3).map_err(|e| invariant(&context, e))?;
        summary.boundedness_predicate = Some(boundedness_predicate(&w, u.derivative(2), u.derivative(3)));
    }
    let compared = compare_series_with_order(&west_metric, &west_curve, &w, jet_order)
        .map_err(|e| curvature_failure(&context, e))?;
    summary.compare_series = Some(compared);
    Ok((summary, artifact, unresolved))
}

pub fn run_curve(cfg: &Config, overrides: &Overrides, out: Option<&Path>) -> Result<Output, CliError> {
    let mut tasks: Vec<(Option<usize>, CurveTask)> = cfg
        .tasks
        .iter()
        .enumerate()
        .filter_map(|(i, t)| match t {
            Task::Curve(c) => Some((Some(i), c.clone())),
            _ => None,
        })
        .collect();
    if tasks.is_empty() {
        tasks = cfg
            .curves
            .iter()
            .map(|(name, e)| {
                (
                    None,
                    CurveTask {
                        curve: name.clone(),
                        samples: DEFAULT_SAMPLES,
                        range: e.curve.domain,
                        csv: None,
                        jet_order: None,
                        limits: None,
                    },
                )
            })
            .collect();
    }
    let mut summaries = Vec::with_capacity(tasks.len());
    let mut artifacts = Vec::new();
    let mut non_convergence = None;
    for (index, task) in &tasks {
        let order = overrides.jet_order.or(task.jet_order).unwrap_or(DEFAULT_ORDER);
        let (summary, artifact, unresolved) = run_curve_task(cfg, *index, task, order, out)?;
        summaries.push(summary);
        artifacts.extend(artifact);
        non_convergence = non_convergence.or(unresolved);
    }
    Ok(Output {
        document: json(&CurveDocument { curves: summaries })?,
        artifacts,
        non_convergence,
    })
}

#[derive(Serialize)]
struct GaussBonnetEntry<'a> {
    region: &'a str,
    surface: &'a str,
    euler_char: i32,
    singular_points: Vec<Point>,
    options: QuadratureOptions,
    report: GBReport,
}

#[derive(Serialize)]
struct GaussBonnetDocument<'a> {
    gauss_bonnet: Vec<GaussBonnetEntry<'a>>,
}

/// Exterior angle below which an undeclared junction counts as smooth.
const SMOOTH_JUNCTION: f64 = 1e-6;

fn restrict_corners(report: &mut GBReport, declared: &[usize], region: &str) -> Result<(), CliError> {
    for c in &report.corners {
        if !declared.contains(&c.index) && c.exterior_angle.abs() > SMOOTH_JUNCTION {
            return Err(ConfigError::new(
                format!("regions.{region}.corners"),
                format!(
                    "junction {} turns by {} but is not declared as a corner",
                    c.index,
                    format_float(c.exterior_angle)
                ),
            )
            .into());
        }
    }
    report.corners.retain(|c| declared.contains(&c.index));
    report.corner_defect = pairwise_sum(&report.corners.iter().map(|c| c.exterior_angle).collect::<Vec<_>>());
    report.total = report.interior_integral + report.boundary_integral + report.corner_defect;
    report.residual = (report.total - report.target).abs();
    Ok(())
}

pub fn run_gauss_bonnet(cfg: &Config, overrides: &Overrides) -> Result<Output, CliError> {
    let mut tasks: Vec<GaussBonnetTask> = cfg
        .tasks
        .iter()
        .filter_map(|t| match t {
            Task::GaussBonnet(g) => Some(g.clone()),
            _ => None,
        })
        .collect();
    if tasks.is_empty() {
        tasks = cfg
            .regions
            .keys()
            .map(|r| GaussBonnetTask {
                region: r.clone(),
                refine: None,
            })
            .collect();
    }
    let mut entries = Vec::with_capacity(tasks.len());
    for t in &tasks {
        let (name, entry) = cfg.regions.get_key_value(&t.region).expect("resolved");
        let m = surface(cfg, &entry.surface);
        let region = entry.region.clone().locate_singular_points(m);
        let opts = QuadratureOptions::refined(overrides.refine.or(t.refine).unwrap_or(0));
        let mut report = gauss_bonnet_check(m, &region, &opts).map_err(|e| match e {
            GaussBonnetError::NonConvergence { .. } => CliError::NonConvergence(format!("region `{name}`: {e}")),
            other => invariant(&format!("region `{name}`"), other),
        })?;
        if let Some(declared) = &entry.corners {
            restrict_corners(&mut report, declared, name)?;
        }
        entries.push(GaussBonnetEntry {
            region: name,
            surface: &entry.surface,
            euler_char: region.euler_char,
            singular_points: region.singular_points.clone(),
            options: opts,
            report,
        });
    }
    Ok(Output::document(json(&GaussBonnetDocument { gauss_bonnet: entries })?))
}

/// Runs the bundled suite for each pattern (or once for everything).
pub fn run_verify_patterns(patterns: &[Option<String>]) -> Result<(VerifyReport, String), CliError> {
    let mut checks = Vec::new();
    for p in patterns {
        let report = run_verify(p.as_deref());
        if report.checks.is_empty() {
            return Err(ConfigError::new("--only", format!("`{}` matches no checks", p.as_deref().unwrap_or(""))).into());
        }
        checks.extend(report.checks);
    }
    let passed = checks.iter().all(|c| c.passed);
    let report = VerifyReport { checks, passed };
    let mut text = report.table();
    for (criterion, ok, n) in report.by_criterion() {
        text.push_str(&format!(
            "{} criterion {criterion} ({n} checks)\n",
            if ok { "PASS" } else { "FAIL" }
        ));
    }
    Ok((report, text))
}

/// Patterns for `verify`: the command-line filter, else the config's verify
/// tasks, else everything.
pub fn verify_patterns(cfg: Option<&Config>, only: Option<&str>) -> Vec<Option<String>> {
    if let Some(p) = only {
        return vec![Some(p.to_string())];
    }
    let from_tasks: Vec<Option<String>> = cfg
        .map(|c| {
            c.tasks
                .iter()
                .filter_map(|t| match t {
                    Task::Verify(v) => Some(v.only.clone()),
                    _ => None,
                })
                .collect()
        })
        .unwrap_or_default();
    if from_tasks.is_empty() {
        vec![None]
    } else {
        from_tasks
    }
}

pub fn verify_json(report: &VerifyReport) -> Result<String, CliError> {
    json(report)
}
