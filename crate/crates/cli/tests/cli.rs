use num_complex::Complex64;
use psidocalc_core::quantize::{write_grid, GridFunction};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn psidocalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psidocalc"))
        .args(args)
        .env("PSIDO_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}); stderr: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn packet_files(dir: &Path, tag: &str, scale: f64) -> Vec<PathBuf> {
    (3..=10)
        .map(|j| {
            let eps = 2f64.powi(-j);
            let g = GridFunction::from_fn(1, 12.0, 256, eps, |x| {
                Complex64::from_polar(scale * (-0.5 * x[0] * x[0]).exp(), 2.0 * x[0])
            })
            .unwrap();
            let p = dir.join(format!("{tag}_{j}.grid"));
            write_grid(&g, &p).unwrap();
            p
        })
        .collect()
}

fn joined(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.to_str().unwrap()).collect::<Vec<_>>().join(",")
}

#[test]
fn check_class_member_exits_zero() {
    let out = psidocalc(&["check-class", "--symbol", "xi1^2 + i*x1^2", "--weight", "japanese", "--m", "2", "--rho", "1", "--N", "0"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["schema"], "psidocalc-report/1");
    assert_eq!(r["status"], "pass");
    assert_eq!(r["result"]["estimate"]["verdict"], "Member");
    assert!(r.get("wall_time_s").is_none());
}

#[test]
fn check_class_wrong_order_exits_one() {
    let out = psidocalc(&["check-class", "--symbol", "xi1", "--m", "0", "--rho", "1", "--N", "0"]);
    assert_eq!(code(&out), 1);
    assert_eq!(report(&out)["status"], "fail");
}

#[test]
fn parse_error_exits_two_with_position() {
    let out = psidocalc(&["check-class", "--symbol", "xi1 + * x1", "--m", "1"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1, column 7"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn parametrix_reports_terms_and_writes_them() {
    let dir = tempfile::tempdir().unwrap();
    let terms = dir.path().join("terms.json");
    let out = psidocalc(&[
        "parametrix", "--symbol", "1 + x1^2 + xi1^2", "--l", "2", "--R", "1", "--K", "2",
        "--emit-terms", terms.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let listed = r["result"]["terms"].as_array().unwrap();
    assert_eq!(listed.len(), 3);
    assert!(listed[1].as_str().unwrap().contains("psi(|z|/1)^2"));
    let order = r["result"]["residual_order"].as_f64().unwrap();
    assert!((order + 6.0).abs() < 0.1, "{order}");
    let emitted: Value = serde_json::from_str(&std::fs::read_to_string(&terms).unwrap()).unwrap();
    assert_eq!(emitted["terms"].as_array().unwrap().len(), 3);
}

#[test]
fn parametrix_rejects_non_hypoelliptic_symbol() {
    let out = psidocalc(&["parametrix", "--symbol", "x1^2 - xi1^2", "--l", "2"]);
    assert_eq!(code(&out), 1);
    assert_eq!(report(&out)["result"]["certificate"]["verdict"]["kind"], "Fail");
}

#[test]
fn config_file_fills_options_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"symbol": "xi1^2 + i*x1^2", "m": 0, "rho": 1, "N": 0, "seed": 7}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = psidocalc(&["--config", cfg, "check-class"]);
    assert_eq!(code(&from_file), 1);
    assert_eq!(report(&from_file)["seed"], 7);
    let overridden = psidocalc(&["--config", cfg, "--seed", "3", "check-class", "--m", "2"]);
    assert_eq!(code(&overridden), 0);
    let r = report(&overridden);
    assert_eq!(r["seed"], 3);
    assert_eq!(r["config"]["m"], 2.0);
    assert_eq!(r["config"]["symbol"], "xi1^2 + i*x1^2");
}

#[test]
fn config_file_with_unknown_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"symbol": "xi1", "order": 3}"#).unwrap();
    let out = psidocalc(&["--config", cfg.to_str().unwrap(), "check-class"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("order"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = ["--seed", "11", "certify", "--symbol", "xi1^2 + i*x1^4", "--weight", "qh:4,2", "--l", "4"];
    let a = psidocalc(&args);
    let b = psidocalc(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn timing_adds_wall_time() {
    let out = psidocalc(&["--timing", "compose", "--b1", "x1", "--b2", "xi1^2"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert!(r["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(r["result"]["sum"], "x1*xi1^2");
}

#[test]
fn output_flag_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = psidocalc(&["-o", path.to_str().unwrap(), "theta", "--amplitude", "x1*y1*xi1", "--theta", "0", "--to", "1"]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["command"], "theta");
    assert_eq!(r["result"]["moved"]["total"], "x1^2*xi1 + i*x1");
}

#[test]
fn apply_identity_writes_grid_and_hashes_input() {
    let dir = tempfile::tempdir().unwrap();
    let u = packet_files(dir.path(), "u", 1.0);
    let v = dir.path().join("v.grid");
    let out = psidocalc(&["apply", "--symbol", "1", "--input", u[0].to_str().unwrap(), "--grid-out", v.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["input_hashes"]["input"].as_str().unwrap().len(), 64);
    assert_eq!(std::fs::metadata(&v).unwrap().len(), std::fs::metadata(&u[0]).unwrap().len());
}

#[test]
fn weak_eq_distinguishes_families() {
    let dir = tempfile::tempdir().unwrap();
    let u = packet_files(dir.path(), "u", 1.0);
    let same = packet_files(dir.path(), "same", 1.0);
    let double = packet_files(dir.path(), "double", 2.0);
    let eq = psidocalc(&["weak-eq", "--u", &joined(&u), "--v", &joined(&same)]);
    assert_eq!(code(&eq), 0);
    assert_eq!(report(&eq)["result"]["verdict"], "Equal");
    let ne = psidocalc(&["weak-eq", "--u", &joined(&u), "--v", &joined(&double)]);
    assert_eq!(code(&ne), 1);
    assert_eq!(report(&ne)["result"]["verdict"], "NotEqual");
}

#[test]
fn osc_int_damped_gaussian() {
    let out = psidocalc(&["osc-int", "--amplitude", "1", "--damping", "1"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let re = r["result"]["integral"]["value"][0].as_f64().unwrap();
    assert!((re - 2.0 * std::f64::consts::PI).abs() < 1e-6, "{re}");
}

#[test]
fn help_lists_flags() {
    let out = psidocalc(&["check-class", "--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--symbol", "--weight", "--m", "--rho", "--N", "--alpha-max", "--class", "--box", "--samples"] {
        assert!(text.contains(flag), "{flag} missing");
    }
}

#[test]
fn missing_option_is_an_error() {
    let out = psidocalc(&["certify", "--l", "2"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--symbol"));
}
