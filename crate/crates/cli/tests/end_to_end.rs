use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn plbvp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plbvp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run(verb: &str, config: &Path, dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![verb, config.to_str().unwrap(), "--output-dir", dir.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    plbvp(&args)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn manufactured_dirichlet_solve_exits_zero_with_full_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\ncatalog = example3\np = 2\nT = 1\nN = 1\nfield = builtin:msin\n[solver]\nn = 32\n",
    );
    let out = run("solve", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let table = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "t,x_1,flux_1,u_1,f_1");
    assert_eq!(lines.len(), 1 + 33);
    // x_1(t) ~ sin(pi t) at the midpoint
    let mid: Vec<f64> = lines[17].split(',').take(2).map(|v| v.parse().unwrap()).collect();
    assert_eq!(mid[0], 0.5);
    assert!((mid[1] - 1.0).abs() < 1e-3);

    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["status"], "passed");
    assert_eq!(report["exit_code"], 0);
    assert!(report["continuation_history"].as_array().unwrap().len() == 7);
    assert!(report["verdicts"].as_array().unwrap().iter().all(|v| v["passed"] == true));
}

#[test]
fn hartman_violation_exits_two_with_failed_verdict() {
    let dir = TempDir::new().unwrap();
    let out = run("solve", &configs().join("hartman-violation.cfg"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["status"], "certificate-failed");
    let failed: Vec<&str> = report["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|v| v["passed"] == false)
        .map(|v| v["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["hartman-hypothesis"]);
}

#[test]
fn empty_lambda_schedule_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("example3.cfg");
    let out = run("solve", &cfg, dir.path(), &["--override", "solver.lambda="]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("solver.lambda"), "{err}");
    assert!(!dir.path().join("solution.csv").exists());
}

#[test]
fn unsolvable_problem_reports_non_convergence() {
    // Periodic ends with a constant forcing that A = N_{R^2_+} cannot balance in the second component.
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\ncatalog = example5\np = 2\nT = 1\nN = 2\na = cone(orthant)\nfield = builtin:constant\n\
         [field]\nvalue = 1, -1\n[solver]\nn = 16\npicard_iters = 20\n",
    );
    let out = run("solve", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["status"], "non-convergence");
    assert!(!report["failure"]["reason"].as_str().unwrap().is_empty());
}

#[test]
fn parse_errors_name_the_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "[problem]\ncatalog = example3\np = 1.5\nT = 1\nN = 1\nfield = builtin:msin\n");
    let out = run("solve", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("p must be ≥ 2"), "{err}");
}

#[test]
fn verify_periodic_orthant_has_exact_zero_h0() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\ncatalog = example5\np = 2\nT = 1\nN = 2\na = cone(orthant)\nfield = builtin:linear\n",
    );
    let out = run("verify", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&dir.path().join("verify.json"));
    let h0 = report["hypotheses"].as_array().unwrap().iter().find(|v| v["name"] == "H0").unwrap();
    assert_eq!(h0["passed"], true);
    assert_eq!(h0["detail"]["min_value"], 0.0);
}

#[test]
fn verify_negated_field_fails_hartman_with_witness() {
    let dir = TempDir::new().unwrap();
    let out = run("verify", &configs().join("hartman-violation.cfg"), dir.path(), &["--seed", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let report = json(&dir.path().join("verify.json"));
    let h = report["hypotheses"].as_array().unwrap().iter().find(|v| v["name"] == "hartman").unwrap();
    assert_eq!(h["passed"], false);
    let zeta: Vec<f64> = serde_json::from_value(h["detail"]["witness"]["zeta"].clone()).unwrap();
    let u: Vec<f64> = serde_json::from_value(h["detail"]["witness"]["u"].clone()).unwrap();
    assert!((zeta.iter().map(|z| z * z).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
    assert!(u.iter().zip(&zeta).all(|(a, b)| (a + b).abs() < 1e-15));
}

#[test]
fn verify_linear_sturm_liouville_passes_sign_branch() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\ncatalog = example6\np = 2\nT = 1\nN = 1\ntheta = 1\neta = 1\nfield = builtin:msin\n",
    );
    let out = run("verify", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&dir.path().join("verify.json"));
    let hx = report["hypotheses"].as_array().unwrap().iter().find(|v| v["name"] == "H(xi)").unwrap();
    assert_eq!(hx["passed"], true);
    assert_eq!(hx["detail"]["branch"], "sign-condition");
}

fn study_orders(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn p2_study_reaches_second_order() {
    let dir = TempDir::new().unwrap();
    let out = run("study", &configs().join("inline-sine.cfg"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let orders = study_orders(&dir.path().join("sine/study.csv"));
    assert_eq!(orders.len(), 3);
    assert!(orders.iter().all(|&o| o >= 1.9), "{orders:?}");
}

#[test]
fn p3_study_orders_are_at_least_first_order() {
    let dir = TempDir::new().unwrap();
    let out = run("study", &configs().join("example3.cfg"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let orders = study_orders(&dir.path().join("study.csv"));
    assert_eq!(orders.len(), 3);
    assert!(orders.iter().all(|&o| o >= 0.9), "{orders:?}");
}

#[test]
fn study_without_reference_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let out = run("study", &configs().join("example1.cfg"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem.reference"));
}

#[test]
fn every_shipped_config_solves() {
    let dir = TempDir::new().unwrap();
    for k in 1..=6 {
        let cfg = configs().join(format!("example{k}.cfg"));
        let out = run("solve", &cfg, dir.path(), &[]);
        assert_eq!(out.status.code(), Some(0), "example{k}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn catalog_lists_all_six_examples() {
    let out = plbvp(&["catalog"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for k in 1..=6 {
        assert!(text.contains(&format!("example{k} ")), "example{k} missing");
    }
    assert!(text.contains("theta"));
}
