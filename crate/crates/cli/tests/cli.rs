use std::process::{Command, Output};

use serde_json::Value;

const GOLDEN_TOL: f64 = 1e-9;

fn oscint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscint")).args(args).env_remove("OSCINT_TOL").output().expect("run oscint")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn golden(key: &str) -> (f64, f64) {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/golden.csv");
    let text = std::fs::read_to_string(path).unwrap();
    let f: Vec<&str> = text.lines().find(|l| l.starts_with(&format!("{key},"))).unwrap().split(',').collect();
    (f[1].parse().unwrap(), f[2].parse().unwrap())
}

fn complex(v: &Value) -> (f64, f64) {
    (v["re"].as_f64().unwrap(), v["im"].as_f64().unwrap())
}

#[test]
fn integrable_oscillation() {
    let out = oscint(&["integrate", "y^(-3/2)*exp(i*y)", "--ray", "1", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    let (re, im) = complex(&v["value"]);
    let (gre, gim) = golden("g4");
    assert!((re - gre).abs() < GOLDEN_TOL && (im - gim).abs() < GOLDEN_TOL, "{v}");
    assert!(v["error_bound"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["verdict"]["integrable"], true);
}

#[test]
fn borderline_power_is_not_integrable() {
    let out = oscint(&["integrate", "y^(-1)*exp(i*y)", "--ray", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("NotIntegrable: NonIntegrableNaive r=-1"), "{}", stderr(&out));
}

#[test]
fn pure_oscillation_has_no_limit() {
    let out = oscint(&["limit", "exp(i*y)"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["exists"], false);
    assert!(v["value"].is_null());
    let pairs = v["certificate"]["dovetail"]["pairs"].as_array().unwrap();
    let eps = v["certificate"]["epsilon"].as_f64().unwrap();
    assert!(pairs.iter().all(|p| p["gap"].as_f64().unwrap() >= eps));
}

#[test]
fn decaying_limit_value() {
    let out = oscint(&["limit", "3 + y^(-1/2)*exp(i*y^(1/2))", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "limit = 3.0 + 0.0i");
}

#[test]
fn output_is_deterministic() {
    let args = ["expand", "(1+y^(-1))^(1/2)*exp(i*y) + log(y)*y^(-1)", "--order", "3"];
    let (a, b) = (oscint(&args), oscint(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn expansion_schema() {
    let v = json(&oscint(&["expand", "(1+y^(-1))^(1/2)*exp(i*y)", "--order", "2"]));
    let scale = v["scale"].as_array().unwrap();
    assert_eq!(scale.len(), 3);
    assert_eq!(scale[1]["r"], "-1");
    assert_eq!(scale[1]["s"], 0);
    let c = &v["coefficients"][2][0];
    assert_eq!(c["exact"], "-1/8");
    assert_eq!(c["phase"], "y");
    assert_eq!(complex(&c["c"]), (-0.125, 0.0));
    assert!(v["remainderC"].as_f64().unwrap() > 0.0);
}

#[test]
fn floats_carry_fifteen_significant_digits() {
    let out = oscint(&["quad", "--rho", "-2", "--sigma", "0", "--a", "1", "--ray"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for tok in text.split(|c: char| !(c.is_ascii_digit() || c == '.' || c == 'e' || c == '-')) {
        let mantissa = tok.split('e').next().unwrap().trim_start_matches('-');
        let digits = mantissa.chars().filter(char::is_ascii_digit).collect::<String>();
        assert!(digits.trim_start_matches('0').len() <= 15, "{tok}");
    }
    let (re, im) = complex(&json(&out)["value"]);
    let (gre, gim) = golden("g1");
    assert!((re - gre).abs() < GOLDEN_TOL && (im - gim).abs() < GOLDEN_TOL);
}

#[test]
fn engine_tolerance_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_oscint"))
        .args(["integrate", "y^(-3/2)*exp(i*y)"])
        .env("OSCINT_TOL", "1e-14")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("Tolerance"));
    // The result is still printed.
    assert!(json(&out)["value"].is_object());
}

#[test]
fn domain_and_input_errors() {
    assert_eq!(oscint(&["integrate", "y^(-2"]).status.code(), Some(2));
    assert_eq!(oscint(&["integrate", "y^(-2)", "--unknown"]).status.code(), Some(2));
    let dep = oscint(&["cud", "--phases", "t,2*t"]);
    assert_eq!(dep.status.code(), Some(2));
    assert!(stderr(&dep).contains("DependentPhases"));
    assert_eq!(oscint(&["quad", "--rho", "-1"]).status.code(), Some(2));
    assert_eq!(oscint(&["veps", "y*exp(i*y)"]).status.code(), Some(2));
}

#[test]
fn parse_round_trips() {
    let v = json(&oscint(&["parse", "2*y^(-1)*exp(i*y) + y^(-1)*exp(i*y) + log(y)^(2)*y"]));
    let norm = v["normalized"].as_str().unwrap().to_string();
    let again = json(&oscint(&["parse", &norm]));
    assert_eq!(again["normalized"], norm.as_str());
    assert_eq!(v["terms"].as_array().unwrap().len(), 2);
    assert_eq!(v["signatures_distinct"], true);
}

#[test]
fn cud_csv_and_decreasing_deviation() {
    let out = oscint(&["cud", "--phases", "t,sqrt2*t^2", "--boxes", "dyadic:4", "--T", "1e2,1e4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("horizon,box,x,fraction,volume,error"));
    assert_eq!(lines.count(), 8);
    let v = json(&oscint(&["cud", "--phases", "t,sqrt2*t^2", "--T", "1e2,1e4", "--param", "x:1:2:3"]));
    assert_eq!(v["decreasing"], true);
    assert_eq!(v["entries"].as_array().unwrap().len(), 2 * 4 * 3);
}

#[test]
fn weyl_limit_is_fresnel() {
    let v = json(&oscint(&["weyl", "--phase", "t^2", "--T", "1e3"]));
    let (re, im) = complex(&v["points"][0]["limit"]);
    let (g, _) = golden("fresnel");
    assert!((re - g).abs() < 1e-8 && (im - g).abs() < 1e-8);
}

#[test]
fn locus_from_family_file() {
    let path = std::env::temp_dir().join(format!("oscint-family-{}.json", std::process::id()));
    std::fs::write(
        &path,
        r#"{"parameters":["x"],"entries":[
            {"coefficient":"x","template":"exp(i*y)"},
            {"coefficient":"1","template":"y^(-2)*exp(i*y)"}]}"#,
    )
    .unwrap();
    let out = oscint(&["locus", path.to_str().unwrap(), "--at", "0", "--at", "0.5"]);
    std::fs::remove_file(&path).ok();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["condition"], "h(x) = |x|^2");
    assert_eq!(v["points"][0]["integrable"], true);
    assert_eq!(v["points"][1]["integrable"], false);
    assert!((v["points"][1]["h"].as_f64().unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn fourier_catalog_matches_closed_form() {
    let v = json(&oscint(&["fourier", "--catalog", "e_abs", "--xi", "0,0.1,0.5,1,2"]));
    for s in v["samples"].as_array().unwrap() {
        let xi = s["xi"].as_f64().unwrap();
        let exact = 2.0 / (1.0 + 4.0 * std::f64::consts::PI.powi(2) * xi * xi);
        let (re, im) = complex(&s["value"]);
        assert!(((re - exact) / exact).abs() < 1e-6 && im.abs() < 1e-12, "xi={xi}");
    }
}
