use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn roughpde(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_roughpde"));
    cmd.args(args).env_remove("ROUGHPDE_OUT");
    if let Some(root) = env_out {
        cmd.env("ROUGHPDE_OUT", root);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn run_ok(args: &[&str]) -> Output {
    let out = roughpde(args, None);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Every file under `dir` except the timestamp sidecar, with its bytes.
fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "run.timestamp.json" {
                files.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn generate_config() -> Value {
    json!({
        "grid": { "points": 32 },
        "horizon": 1.0,
        "coefficient": { "kind": "rough", "beta": -0.2, "seed": 5, "n_slices": 3 }
    })
}

fn heat_config(steps: usize) -> Value {
    json!({
        "grid": { "points": 32 },
        "alpha": 0.3,
        "beta": -0.2,
        "horizon": 0.25,
        "nonlinearity": { "kind": "quadratic" },
        "coefficient": { "kind": "constant", "value": 0.0 },
        "initial": { "kind": "expression", "expr": "sin(x)" },
        "solver": { "n_time_steps": steps }
    })
}

#[test]
fn generate_is_byte_reproducible_and_loads_back() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "gen.json", &generate_config());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_ok(&["generate", s(&cfg), "--out", s(&a)]);
    run_ok(&["generate", s(&cfg), "--out", s(&b)]);
    assert_eq!(snapshot(&a), snapshot(&b));
    assert!(a.join("run.timestamp.json").exists());

    let bundle = roughpde::io::read_bundle(&a.join("bundle")).unwrap();
    let direct = roughpde::roughfield::generate_rough(-0.2, roughpde::Grid::line(32).unwrap(), 5, 3, 1.0).unwrap();
    assert_eq!(bundle.slices, direct.slices);
}

#[test]
fn generate_rejects_beta_outside_the_window() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = generate_config();
    c["coefficient"]["beta"] = json!(-0.6);
    let cfg = write_config(tmp.path(), "gen.json", &c);
    let out = roughpde(&["generate", s(&cfg), "--out", s(&tmp.path().join("o"))], None);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("A2"));
}

#[test]
fn schema_violations_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = generate_config();
    c["colour"] = json!("blue");
    let cfg = write_config(tmp.path(), "gen.json", &c);
    let out = roughpde(&["generate", s(&cfg), "--out", s(&tmp.path().join("o"))], None);
    assert_eq!(out.status.code(), Some(64));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn zero_drift_solve_is_heat_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "solve.json", &heat_config(8));
    let out = tmp.path().join("o");
    run_ok(&["solve", s(&cfg), "--out", s(&out)]);
    let manifest = read_json(&out.join("run.json"));
    assert_eq!(manifest["results"]["iterations"], json!(1));
    // sin(x) decays like e^{-t} under the heat flow
    let u = roughpde::io::read_field(&out.join("u_0008.json")).unwrap();
    let decay = (-0.25_f64).exp();
    let grid = *u.grid();
    for (i, v) in u.to_physical().iter().enumerate() {
        assert!((v - decay * grid.node(i)[0].sin()).abs() < 1e-12);
    }
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 10);
}

#[test]
fn run_manifest_regenerates_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = heat_config(8);
    c["coefficient"] = json!({ "kind": "rough", "beta": -0.2, "seed": 2, "n_slices": 2 });
    c["horizon"] = json!(1e-7);
    let cfg = write_config(tmp.path(), "solve.json", &c);
    let first = tmp.path().join("first");
    run_ok(&["solve", s(&cfg), "--out", s(&first)]);
    let manifest = read_json(&first.join("run.json"));
    let factor = manifest["results"]["max_contraction_factor"].as_f64().unwrap();
    assert!(factor < 1.0);
    let again = tmp.path().join("again");
    run_ok(&["solve", s(&first.join("run.json")), "--out", s(&again)]);
    assert_eq!(snapshot(&first), snapshot(&again));

    let wrong = roughpde(&["bsde", s(&first.join("run.json")), "--out", s(&tmp.path().join("x"))], None);
    assert_eq!(wrong.status.code(), Some(64));
}

#[test]
fn non_convergence_exits_2_and_keeps_the_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = heat_config(8);
    c["coefficient"] = json!({ "kind": "rough", "beta": -0.2, "seed": 1, "n_slices": 2 });
    c["horizon"] = json!(0.5);
    c["initial"] = json!({ "kind": "expression", "expr": "0.5*sin(x)" });
    c["solver"] = json!({ "n_time_steps": 8, "rho": 1.0, "max_picard_iters": 2 });
    let cfg = write_config(tmp.path(), "solve.json", &c);
    let out = tmp.path().join("o");
    let run = roughpde(&["solve", s(&cfg), "--out", s(&out)], None);
    assert_eq!(run.status.code(), Some(2));
    let trace = fs::read_to_string(out.join("picard.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3);
    assert_eq!(read_json(&out.join("run.json"))["status"], json!("non_convergence"));
}

fn bsde_config(phi: Value, coefficient: Value) -> Value {
    json!({
        "grid": { "points": 32 },
        "alpha": 0.3,
        "beta": -0.2,
        "horizon": 0.5,
        "nonlinearity": { "kind": "quadratic" },
        "coefficient": coefficient,
        "terminal": phi,
        "solver": { "n_time_steps": 8 },
        "x": 1.0,
        "n_paths": 500,
        "seed": 3
    })
}

#[test]
fn constant_terminal_value_gives_constant_y() {
    let tmp = tempfile::tempdir().unwrap();
    let c = bsde_config(json!({ "kind": "constant", "value": 0.7 }), json!({ "kind": "constant", "value": 0.0 }));
    let cfg = write_config(tmp.path(), "bsde.json", &c);
    let out = tmp.path().join("o");
    run_ok(&["bsde", s(&cfg), "--out", s(&out)]);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut rows = 0;
    for line in summary.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((cols[1] - 0.7).abs() < 1e-12, "{line}");
        assert!(cols[2].abs() < 1e-12 && cols[3].abs() < 1e-12, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 9);
}

#[test]
fn smooth_drift_bsde_passes_its_checks_and_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = bsde_config(
        json!({ "kind": "expression", "expr": "0.2*sin(x) + 0.1*cos(2*x)" }),
        json!({ "kind": "smooth", "expr": "1 + 0.5*sin(x - t)", "n_slices": 4 }),
    );
    c["write_paths"] = json!(true);
    let cfg = write_config(tmp.path(), "bsde.json", &c);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_ok(&["bsde", s(&cfg), "--out", s(&a)]);
    run_ok(&["bsde", s(&cfg), "--out", s(&b)]);
    assert_eq!(snapshot(&a), snapshot(&b));
    let report = read_json(&a.join("report.json"));
    assert_eq!(report["feynman_kac"]["passed"], json!(true));
    assert_eq!(report["martingale_passed"], json!(true));
    let paths = fs::read_to_string(a.join("paths.csv")).unwrap();
    assert_eq!(paths.lines().count(), 1 + 500 * 9);
}

#[test]
fn validate_reports_and_rejects_unknown_suites() {
    let tmp = tempfile::tempdir().unwrap();
    let out = roughpde(&["validate", "oracle", "--quick"], Some(tmp.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS oracle/")));
    assert!(tmp.path().join("validate").join("report.json").exists());

    let bad = roughpde(&["validate", "fourier"], Some(tmp.path()));
    assert_eq!(bad.status.code(), Some(64));
}

#[test]
fn compare_checks_oracle_applicability() {
    let tmp = tempfile::tempdir().unwrap();
    let c = json!({
        "grid": { "points": 64 },
        "alpha": 0.5,
        "beta": -0.1,
        "horizon": 0.1,
        "oracle": "cole_hopf",
        "nonlinearity": { "kind": "sine" },
        "initial": { "kind": "expression", "expr": "0.5*sin(x)" },
        "steps": [16, 32]
    });
    let cfg = write_config(tmp.path(), "cmp.json", &c);
    let out = roughpde(&["compare", s(&cfg), "--out", s(&tmp.path().join("o"))], None);
    assert_eq!(out.status.code(), Some(64));

    let mut ok = c.clone();
    ok["nonlinearity"] = json!({ "kind": "quadratic" });
    let cfg = write_config(tmp.path(), "cmp_ok.json", &ok);
    let dir = tmp.path().join("ok");
    run_ok(&["compare", s(&cfg), "--out", s(&dir)]);
    assert!(dir.join("errors_16.csv").exists() && dir.join("errors_32.csv").exists());
    let ratio = read_json(&dir.join("run.json"))["results"]["ratios"][0].as_f64().unwrap();
    assert!(ratio > 1.5, "ratio {ratio}");
}

#[test]
fn help_exits_zero() {
    let out = roughpde(&["--help"], None);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("validate"));
}
