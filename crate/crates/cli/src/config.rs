//! Config documents: raw schema, then resolution into core types.
//!
//! Every rejection carries the path of the offending field, in the same
//! `a.b[0].c` notation that `serde_path_to_error` uses for shape errors.

use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;
use whitney_core::builtins::builtin;
use whitney_core::curvature::{Curve2, CurveParseError};
use whitney_core::expr::{parse, Expr, ParseError, VarSet};
use whitney_core::gaussbonnet::Region;
use whitney_core::metric::{pullback, ChartBox, Immersion3, MetricField};

/// Rejection of a config document, pointing at the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    surfaces: BTreeMap<String, RawSurface>,
    #[serde(default)]
    curves: BTreeMap<String, RawCurve>,
    #[serde(default)]
    regions: BTreeMap<String, RawRegion>,
    #[serde(default)]
    tasks: Vec<RawTask>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    kind: String,
    name: Option<String>,
    #[serde(rename = "E")]
    e: Option<String>,
    #[serde(rename = "F")]
    f: Option<String>,
    #[serde(rename = "G")]
    g: Option<String>,
    x: Option<String>,
    y: Option<String>,
    z: Option<String>,
    chart: Option<RawChart>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChart {
    u: [f64; 2],
    v: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurve {
    surface: String,
    u: String,
    v: String,
    domain: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    edges: Vec<RawEdge>,
    #[serde(default = "one")]
    euler_char: i32,
    polar_radius: Option<f64>,
    corners: Option<Vec<usize>>,
}

fn one() -> i32 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawEdge {
    Name(String),
    Spec(EdgeSpec),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeSpec {
    curve: String,
    #[serde(default)]
    reversed: bool,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
enum RawTask {
    Analyze(AnalyzeTask),
    Curve(RawCurveTask),
    GaussBonnet(GaussBonnetTask),
    Verify(VerifyTask),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeTask {
    pub surface: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurveTask {
    curve: String,
    samples: Option<usize>,
    range: Option<[f64; 2]>,
    csv: Option<String>,
    jet_order: Option<usize>,
    limits: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussBonnetTask {
    pub region: String,
    pub refine: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyTask {
    pub only: Option<String>,
}

/// Sample count of a curve task when none is given.
pub const DEFAULT_SAMPLES: usize = 101;
/// Accepted jet orders.
pub const JET_ORDERS: std::ops::RangeInclusive<usize> = 2..=24;
/// Largest `refine` level.
pub const MAX_REFINE: u32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveEntry {
    pub curve: Curve2,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionEntry {
    pub region: Region,
    pub surface: String,
    /// Junctions declared as corners; all junctions when absent.
    pub corners: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveTask {
    pub curve: String,
    pub samples: usize,
    pub range: [f64; 2],
    pub csv: Option<String>,
    pub jet_order: Option<usize>,
    pub limits: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Analyze(AnalyzeTask),
    Curve(CurveTask),
    GaussBonnet(GaussBonnetTask),
    Verify(VerifyTask),
}

/// A validated config: every reference resolves and every expression parses.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Declared surfaces plus any builtin referenced by name.
    pub surfaces: BTreeMap<String, MetricField>,
    pub curves: BTreeMap<String, CurveEntry>,
    pub regions: BTreeMap<String, RegionEntry>,
    pub tasks: Vec<Task>,
}

pub fn load(text: &str) -> Result<Config, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut *de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(path, e.into_inner().to_string())
    })?;
    de.end().map_err(|e| ConfigError::new(".", e.to_string()))?;
    resolve(raw)
}

fn expr_error(e: ParseError) -> String {
    format!("bad expression: {e}")
}

fn required<'a>(path: &str, field: &str, value: &'a Option<String>) -> Result<&'a str, ConfigError> {
    value
        .as_deref()
        .ok_or_else(|| ConfigError::new(format!("{path}.{field}"), "missing field"))
}

fn forbid<T>(path: &str, field: &str, value: &Option<T>, kind: &str) -> Result<(), ConfigError> {
    match value {
        Some(_) => Err(ConfigError::new(
            format!("{path}.{field}"),
            format!("not allowed for kind `{kind}`"),
        )),
        None => Ok(()),
    }
}

fn chart(path: &str, raw: &Option<RawChart>) -> Result<ChartBox, ConfigError> {
    let c = raw
        .as_ref()
        .ok_or_else(|| ConfigError::new(format!("{path}.chart"), "missing field"))?;
    for (axis, r) in [("u", c.u), ("v", c.v)] {
        if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
            return Err(ConfigError::new(
                format!("{path}.chart.{axis}"),
                format!("empty interval [{}, {}]", r[0], r[1]),
            ));
        }
    }
    Ok(ChartBox::new(c.u, c.v).expect("intervals checked"))
}

fn surface_expr(path: &str, field: &str, value: &Option<String>) -> Result<Expr, ConfigError> {
    let text = required(path, field, value)?;
    parse(text, VarSet::Surface).map_err(|e| ConfigError::new(format!("{path}.{field}"), expr_error(e)))
}

fn build_surface(name: &str, s: &RawSurface) -> Result<MetricField, ConfigError> {
    let path = format!("surfaces.{name}");
    match s.kind.as_str() {
        "builtin" => {
            for (field, v) in [("E", &s.e), ("F", &s.f), ("G", &s.g), ("x", &s.x), ("y", &s.y), ("z", &s.z)] {
                forbid(&path, field, v, "builtin")?;
            }
            forbid(&path, "chart", &s.chart, "builtin")?;
            let spec = required(&path, "name", &s.name)?;
            builtin(spec).map_err(|e| ConfigError::new(format!("{path}.name"), e.to_string()))
        }
        "metric" => {
            for (field, v) in [("name", &s.name), ("x", &s.x), ("y", &s.y), ("z", &s.z)] {
                forbid(&path, field, v, "metric")?;
            }
            let e = surface_expr(&path, "E", &s.e)?;
            let f = surface_expr(&path, "F", &s.f)?;
            let g = surface_expr(&path, "G", &s.g)?;
            Ok(MetricField::from_coefficients(name, e, f, g, chart(&path, &s.chart)?))
        }
        "immersion" => {
            for (field, v) in [("name", &s.name), ("E", &s.e), ("F", &s.f), ("G", &s.g)] {
                forbid(&path, field, v, "immersion")?;
            }
            let x = required(&path, "x", &s.x)?;
            let y = required(&path, "y", &s.y)?;
            let z = required(&path, "z", &s.z)?;
            let chart = chart(&path, &s.chart)?;
            for (field, text) in [("x", x), ("y", y), ("z", z)] {
                parse(text, VarSet::Surface)
                    .map_err(|e| ConfigError::new(format!("{path}.{field}"), expr_error(e)))?;
            }
            let im = Immersion3::parse(x, y, z, chart).expect("components parsed above");
            Ok(pullback(name, im))
        }
        other => Err(ConfigError::new(
            format!("{path}.kind"),
            format!("unknown kind `{other}`; expected builtin, metric or immersion"),
        )),
    }
}

/// Looks a surface up by declared name, falling back to a builtin spec.
fn surface_ref(
    surfaces: &mut BTreeMap<String, MetricField>,
    declared: &BTreeMap<String, RawSurface>,
    path: String,
    name: &str,
) -> Result<String, ConfigError> {
    if declared.contains_key(name) || surfaces.contains_key(name) {
        return Ok(name.to_string());
    }
    match builtin(name) {
        Ok(m) => {
            surfaces.insert(name.to_string(), m);
            Ok(name.to_string())
        }
        Err(_) => Err(ConfigError::new(path, format!("unknown surface `{name}`"))),
    }
}

fn resolve(raw: RawConfig) -> Result<Config, ConfigError> {
    let mut surfaces = BTreeMap::new();
    for (name, s) in &raw.surfaces {
        surfaces.insert(name.clone(), build_surface(name, s)?);
    }

    let mut curves = BTreeMap::new();
    for (name, c) in &raw.curves {
        let path = format!("curves.{name}");
        let surface = surface_ref(&mut surfaces, &raw.surfaces, format!("{path}.surface"), &c.surface)?;
        let curve = Curve2::parse(name.as_str(), &c.u, &c.v, c.domain).map_err(|e| match e {
            CurveParseError::Parse(p) => {
                let field = if parse(&c.u, VarSet::Curve).is_err() { "u" } else { "v" };
                ConfigError::new(format!("{path}.{field}"), expr_error(p))
            }
            CurveParseError::Curve(err) => ConfigError::new(format!("{path}.domain"), err.to_string()),
        })?;
        curves.insert(name.clone(), CurveEntry { curve, surface });
    }

    let mut regions = BTreeMap::new();
    for (name, r) in &raw.regions {
        let path = format!("regions.{name}");
        if r.edges.is_empty() {
            return Err(ConfigError::new(format!("{path}.edges"), "a region needs at least one edge"));
        }
        let mut edges = Vec::with_capacity(r.edges.len());
        let mut surface: Option<&str> = None;
        for (i, e) in r.edges.iter().enumerate() {
            let (curve, reversed, field) = match e {
                RawEdge::Name(n) => (n, false, format!("{path}.edges[{i}]")),
                RawEdge::Spec(s) => (&s.curve, s.reversed, format!("{path}.edges[{i}].curve")),
            };
            let entry = curves
                .get(curve)
                .ok_or_else(|| ConfigError::new(field.clone(), format!("unknown curve `{curve}`")))?;
            match surface {
                None => surface = Some(&entry.surface),
                Some(s) if s != entry.surface => {
                    return Err(ConfigError::new(
                        field,
                        format!("curve `{curve}` lives on `{}` but the region is on `{s}`", entry.surface),
                    ));
                }
                Some(_) => {}
            }
            edges.push(if reversed { entry.curve.reversed() } else { entry.curve.clone() });
        }
        let surface = surface.expect("at least one edge").to_string();
        let mut region = Region::new(name.as_str(), edges, r.euler_char)
            .map_err(|e| ConfigError::new(format!("{path}.edges"), e.to_string()))?;
        if let Some(r0) = r.polar_radius {
            if !(r0.is_finite() && r0 > 0.0) {
                return Err(ConfigError::new(format!("{path}.polar_radius"), "must be positive"));
            }
            region = region.with_polar_radius(r0);
        }
        if let Some(list) = &r.corners {
            for (k, &j) in list.iter().enumerate() {
                if j >= r.edges.len() {
                    return Err(ConfigError::new(
                        format!("{path}.corners[{k}]"),
                        format!("junction {j} out of range for {} edges", r.edges.len()),
                    ));
                }
                if list[..k].contains(&j) {
                    return Err(ConfigError::new(format!("{path}.corners[{k}]"), format!("junction {j} repeated")));
                }
            }
        }
        regions.insert(
            name.clone(),
            RegionEntry {
                region,
                surface,
                corners: r.corners.clone(),
            },
        );
    }

    let mut tasks = Vec::with_capacity(raw.tasks.len());
    for (i, t) in raw.tasks.into_iter().enumerate() {
        let path = format!("tasks[{i}]");
        tasks.push(match t {
            RawTask::Analyze(a) => {
                let surface = surface_ref(&mut surfaces, &raw.surfaces, format!("{path}.analyze.surface"), &a.surface)?;
                Task::Analyze(AnalyzeTask { surface })
            }
            RawTask::Curve(c) => {
                let path = format!("{path}.curve");
                let entry = curves
                    .get(&c.curve)
                    .ok_or_else(|| ConfigError::new(format!("{path}.curve"), format!("unknown curve `{}`", c.curve)))?;
                let samples = c.samples.unwrap_or(DEFAULT_SAMPLES);
                if samples < 2 {
                    return Err(ConfigError::new(format!("{path}.samples"), "need at least 2 samples"));
                }
                let domain = entry.curve.domain;
                let range = c.range.unwrap_or(domain);
                if !(range[0] < range[1] && range[0] >= domain[0] && range[1] <= domain[1]) {
                    return Err(ConfigError::new(
                        format!("{path}.range"),
                        format!("must be a nonempty subinterval of [{}, {}]", domain[0], domain[1]),
                    ));
                }
                if let Some(k) = c.jet_order {
                    if !JET_ORDERS.contains(&k) {
                        return Err(ConfigError::new(
                            format!("{path}.jet_order"),
                            format!("must lie in {}..={}", JET_ORDERS.start(), JET_ORDERS.end()),
                        ));
                    }
                }
                Task::Curve(CurveTask {
                    curve: c.curve,
                    samples,
                    range,
                    csv: c.csv,
                    jet_order: c.jet_order,
                    limits: c.limits,
                })
            }
            RawTask::GaussBonnet(g) => {
                let path = format!("{path}.gauss-bonnet");
                if !regions.contains_key(&g.region) {
                    return Err(ConfigError::new(format!("{path}.region"), format!("unknown region `{}`", g.region)));
                }
                if g.refine.is_some_and(|r| r > MAX_REFINE) {
                    return Err(ConfigError::new(format!("{path}.refine"), format!("at most {MAX_REFINE}")));
                }
                Task::GaussBonnet(g)
            }
            RawTask::Verify(v) => Task::Verify(v),
        });
    }

    Ok(Config {
        surfaces,
        curves,
        regions,
        tasks,
    })
}
