use std::process::Command;

use jsonschema::JSONSchema;
use serde_json::Value;

fn schema(name: &str) -> JSONSchema {
    let path = format!("{}/schemas/{name}.json", env!("CARGO_MANIFEST_DIR"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    JSONSchema::compile(&v).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn check(name: &str, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_oscint")).args(args).env_remove("OSCINT_TOL").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let compiled = schema(name);
    let msgs: Vec<String> = match compiled.validate(&v) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "{name} {args:?}:\n{}", msgs.join("\n"));
}

#[test]
fn integrate_output() {
    check("integrate", &["integrate", "y^(-3/2)*exp(i*y)"]);
    check("integrate", &["integrate", "(1+y^(-1))^(1/2)*y^(-2)*exp(i*y) + y^(-3)", "--ray", "2"]);
    check("integrate", &["integrate", "exp(i*y)", "--interval", "1:4"]);
}

#[test]
fn expand_output() {
    check("expand", &["expand", "(1+y^(-1))^(1/2)*exp(i*y) + log(y)*y^(-1)", "--order", "3"]);
}

#[test]
fn limit_output() {
    check("limit", &["limit", "exp(i*y)"]);
    check("limit", &["limit", "3 + y^(-1/2)*exp(i*y^(1/2))"]);
}

#[test]
fn quad_output() {
    check("quad", &["quad", "--rho", "-2", "--sigma", "0", "--a", "1", "--ray"]);
    check("quad", &["quad", "--rho", "1", "--sigma", "1", "--a", "1", "--b", "3"]);
}

#[test]
fn cud_output() {
    check("cud", &["cud", "--phases", "t,sqrt2*t^2", "--T", "1e2,1e3", "--param", "x:1:2:2"]);
}

#[test]
fn weyl_output() {
    check("weyl", &["weyl", "--phase", "t^2", "--T", "1e2"]);
}

#[test]
fn schemas_reject_malformed_output() {
    let bad = serde_json::json!({ "value": { "re": 1.0 }, "error_bound": -1.0 });
    assert!(!schema("integrate").is_valid(&bad));
    assert!(!schema("quad").is_valid(&serde_json::json!({})));
}
