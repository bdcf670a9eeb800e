use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use whitney_cli::config::load;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn whitney(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_whitney"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const MALFORMED: [(&str, &str); 15] = [
    ("dangling_surface", "curves.g.surface"),
    ("bad_expression", "surfaces.m.E"),
    ("empty_box", "surfaces.m.chart.v"),
    ("wrong_variable", "curves.g.v"),
    ("domain_type", "curves.g.domain"),
    ("unknown_kind", "surfaces.m.kind"),
    ("bad_builtin", "surfaces.w.name"),
    ("dangling_edge", "regions.r.edges[1]"),
    ("open_boundary", "regions.r.edges"),
    ("mixed_surfaces", "regions.r.edges[1].curve"),
    ("dangling_task", "tasks[1].gauss-bonnet.region"),
    ("unknown_field", "curves.g.colour"),
    ("bad_samples", "tasks[0].curve.samples"),
    ("corner_out_of_range", "regions.r.corners[1]"),
    ("not_json", "surfaces.?"),
];

#[test]
fn malformed_configs_name_the_field() {
    for (name, path) in MALFORMED {
        let text = fs::read_to_string(fixture(&format!("malformed/{name}.json"))).unwrap();
        let err = load(&text).expect_err(name);
        assert_eq!(err.path, path, "{name}: {err}");
        assert!(!err.message.is_empty());
    }
}

#[test]
fn malformed_config_exits_with_code_two() {
    for (name, path) in MALFORMED {
        let file = fixture(&format!("malformed/{name}.json"));
        let out = whitney(&["analyze", "--config", path_str(&file)]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let stderr = String::from_utf8(out.stderr).unwrap();
        assert!(stderr.contains(path), "{name}: {stderr}");
        assert!(out.stdout.is_empty());
    }
    let out = whitney(&["analyze", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_reports() {
    let out = whitney(&["analyze", "--config", path_str(&fixture("curves.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let entries = doc["analyze"].as_array().unwrap();
    let names: Vec<&str> = entries.iter().map(|e| e["surface"].as_str().unwrap()).collect();
    assert_eq!(names, ["crosscap", "plane", "west(2,3,1)"]);

    let cc = entries[0]["singular_points"].as_array().unwrap();
    assert_eq!(cc.len(), 1);
    assert_eq!(cc[0]["report"]["classification"], "intrinsic_cross_cap");
    let p = cc[0]["report"]["p"].as_array().unwrap();
    assert!(p.iter().all(|x| x.as_f64().unwrap().abs() < 1e-9));
    let w = &cc[0]["west"];
    for (key, want) in [("alpha02", 2.0), ("alpha11", 0.0), ("alpha20", 0.0)] {
        assert!((w[key].as_f64().unwrap() - want).abs() < 1e-8, "{key}");
    }

    assert!(entries[1]["singular_points"].as_array().unwrap().is_empty());

    let w = &entries[2]["singular_points"][0]["west"];
    for (key, want) in [("alpha02", 2.0), ("alpha11", 3.0), ("alpha20", 1.0)] {
        assert!((w[key].as_f64().unwrap() - want).abs() < 1e-8, "{key}: {}", w[key]);
    }
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn curve_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("run.json");
    let out = whitney(&[
        "curve",
        "--config",
        path_str(&fixture("curves.json")),
        "--out",
        path_str(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    let curves = doc["curves"].as_array().unwrap();
    let find = |name: &str| curves.iter().find(|c| c["curve"] == name).unwrap();

    let g1 = find("g1");
    let limit = g1["limits"]["kappa_g"]["value"].as_f64().unwrap();
    assert!((limit - 6.0 / 5f64.sqrt()).abs() < 1e-8);
    assert_eq!(g1["compare_series"]["verdict"], "consistent");

    let g3 = find("g3");
    assert_eq!(g3["limits"]["kappa_g"]["status"], "diverges");
    assert!(g3["limits"]["kappa_g"]["value"].is_null());
    let ds = g3["limits"]["kappa_ds"]["value"].as_f64().unwrap();
    assert!((ds + 0.25).abs() < 1e-8);
    assert_eq!(g3["boundedness_predicate"], false);
    assert_eq!(g3["compare_series"]["verdict"], "inconsistent");

    let circle = find("circle");
    assert!(circle["limits"].is_null());
    let csv = fs::read_to_string(dir.path().join("run.circle.csv")).unwrap();
    assert!(csv.starts_with("t,speed2,kappa_g,ds_dt,kappa_ds_dt\n"));
    assert!(!csv.contains('\r'));
    let kappa = column(&csv, "kappa_g");
    assert_eq!(kappa.len(), 5);
    assert!(kappa.iter().all(|k| (k - 1.0).abs() < 1e-12));

    // the first row of a curve through the singular point is undefined
    let g3_csv = fs::read_to_string(dir.path().join("run.g3.csv")).unwrap();
    assert!(g3_csv.lines().nth(1).unwrap().ends_with("NaN,NaN,NaN,NaN"));
}

#[test]
fn limits_off_a_singular_point_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"curves": {"g": {"surface": "crosscap", "u": "0.1 + t", "v": "t", "domain": [0, 1]}},
            "tasks": [{"curve": {"curve": "g", "limits": true}}]}"#,
    )
    .unwrap();
    let out = whitney(&["curve", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("tasks[0].curve.limits"));
}

#[test]
fn undeclared_corner_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"curves": {
              "a": {"surface": "plane", "u": "t", "v": "0", "domain": [0, 1]},
              "b": {"surface": "plane", "u": "1 - t", "v": "t", "domain": [0, 1]},
              "c": {"surface": "plane", "u": "0", "v": "1 - t", "domain": [0, 1]}},
            "regions": {"tri": {"edges": ["a", "b", "c"], "corners": [0, 1]}}}"#,
    )
    .unwrap();
    let out = whitney(&["gauss-bonnet", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("regions.tri.corners"));
}

#[test]
fn gauss_bonnet_regions() {
    let out = whitney(&["gauss-bonnet", "--config", path_str(&fixture("regions.json"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    for e in doc["gauss_bonnet"].as_array().unwrap() {
        let r = &e["report"];
        for key in [
            "interior_integral",
            "boundary_integral",
            "corner_defect",
            "total",
            "target",
            "residual",
            "quadrature_error",
        ] {
            assert!(r[key].is_number(), "{key}");
        }
        assert!(r["residual"].as_f64().unwrap() < 1e-6);
        assert_eq!(e["singular_points"].as_array().unwrap().len(), 1);
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &str); 3] = [("analyze", "curves.json"), ("curve", "curves.json"), ("gauss-bonnet", "regions.json")];
    for (command, cfg) in cases {
        let out_path = dir.path().join(format!("{command}.json"));
        let mut runs = Vec::new();
        for _ in 0..2 {
            let out = whitney(&[
                command,
                "--config",
                path_str(&fixture(cfg)),
                "--out",
                path_str(&out_path),
                "--refine",
                "0",
            ]);
            assert_eq!(out.status.code(), Some(0));
            let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.path())
                .unwrap()
                .map(|e| e.unwrap().path())
                .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with(command))
                .map(|p| (p.display().to_string(), fs::read(&p).unwrap()))
                .collect();
            files.sort();
            runs.push(files);
        }
        assert!(!runs[0].is_empty());
        assert_eq!(runs[0], runs[1], "{command}");
    }
}

#[test]
fn verify_filter_runs_only_gauss_bonnet() {
    let out = whitney(&["verify", "--only", "gauss-bonnet"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let summary: Vec<&str> = text.lines().filter(|l| l.contains(" criterion ")).collect();
    assert_eq!(summary.len(), 2);
    assert!(summary[0].starts_with("PASS criterion 4"));
    assert!(summary[1].starts_with("PASS criterion 5"));
    let ids: Vec<&str> = text.lines().skip(1).filter(|l| l.ends_with("PASS") || l.ends_with("FAIL")).collect();
    assert!(ids.iter().all(|l| l.starts_with("gb-")), "{ids:?}");
}

#[test]
fn bad_flags_are_config_errors() {
    let cfg = fixture("curves.json");
    let out = whitney(&["curve", "--config", path_str(&cfg), "--jet-order", "99"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("--jet-order"));
    let out = whitney(&["gauss-bonnet", "--config", path_str(&cfg), "--refine", "9"]);
    assert_eq!(out.status.code(), Some(2));
    let out = whitney(&["verify", "--only", "no-such-battery"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn region_that_is_not_star_shaped_is_an_invariant_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let pts = [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [0.2, 0.5], [0.4, 0.2], [-0.5, 0.5]];
    let curves: Vec<String> = (0..pts.len())
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
            format!(
                r#""e{i}": {{"surface": "crosscap", "u": "{} + ({})*t", "v": "{} + ({})*t", "domain": [0, 1]}}"#,
                a[0],
                b[0] - a[0],
                a[1],
                b[1] - a[1]
            )
        })
        .collect();
    let edges: Vec<String> = (0..pts.len()).map(|i| format!("\"e{i}\"")).collect();
    fs::write(
        &cfg,
        format!(
            r#"{{"curves": {{{}}}, "regions": {{"hook": {{"edges": [{}]}}}}}}"#,
            curves.join(", "),
            edges.join(", ")
        ),
    )
    .unwrap();
    let out = whitney(&["gauss-bonnet", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stderr).unwrap().contains("star-shaped"));
}
