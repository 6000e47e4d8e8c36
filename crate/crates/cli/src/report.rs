//! Output formatting and the mapping from errors to exit codes.

use std::error::Error as StdError;

use num_complex::Complex64;
use oscint_core::asymptotics::AsymptoticsError;
use oscint_core::equidist::EquidistError;
use oscint_core::integrate::IntegrateError;
use oscint_core::model::{ModelError, ParamError};
use oscint_core::prepare::PrepareError;
use oscint_core::quad::QuadError;
use serde_json::{json, Map, Value};

pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_DOMAIN: u8 = 2;
pub const EXIT_TOLERANCE: u8 = 3;

pub const SIGNIFICANT_DIGITS: usize = 15;
pub const DEFAULT_TOL: f64 = 1e-8;

/// What a subcommand produced: JSON always, CSV and text where they make sense.
pub struct Report {
    pub json: Value,
    pub csv: Option<String>,
    pub text: Option<String>,
    /// Set when a reported error estimate exceeds the engine tolerance.
    pub tolerance_failure: Option<String>,
}

impl Report {
    pub fn new(json: Value) -> Self {
        Report { json, csv: None, text: None, tolerance_failure: None }
    }

    pub fn csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }

    pub fn text(mut self, text: String) -> Self {
        self.text = Some(text);
        self
    }

    /// Flags a tolerance failure when `bound > tol`.
    pub fn check_bound(mut self, what: &str, bound: f64, tol: f64) -> Self {
        if !(bound <= tol) && self.tolerance_failure.is_none() {
            self.tolerance_failure = Some(format!("Tolerance: {what} error bound {bound:.3e} exceeds {tol:e}"));
        }
        self
    }
}

/// `OSCINT_TOL`, or the default when unset.
pub fn engine_tolerance() -> Result<f64, String> {
    match std::env::var("OSCINT_TOL") {
        Err(_) => Ok(DEFAULT_TOL),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(format!("OSCINT_TOL='{s}' is not a positive number")),
        },
    }
}

pub fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounds every float to 15 significant digits so output is stable across
/// platforms and runs.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, normalize(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

pub fn format_float(x: f64) -> String {
    let r = round_sig(x);
    if r.is_finite() {
        serde_json::Number::from_f64(r).map_or_else(|| r.to_string(), |n| n.to_string())
    } else {
        r.to_string()
    }
}

fn quad_code(e: &QuadError) -> u8 {
    match e {
        QuadError::Tolerance { .. } => EXIT_TOLERANCE,
        QuadError::Diverges { .. } | QuadError::InvalidInterval(_) => EXIT_DOMAIN,
    }
}

fn model_code(e: &ModelError) -> u8 {
    match e {
        ModelError::Oracle(q) => quad_code(q),
        _ => EXIT_DOMAIN,
    }
}

fn prepare_code(e: &PrepareError) -> u8 {
    match e {
        PrepareError::ToleranceExceeded(_) => EXIT_TOLERANCE,
        PrepareError::Internal(_) | PrepareError::Diverged(_) => EXIT_INTERNAL,
        PrepareError::RuleNotApplicable(_) | PrepareError::NotARay(_) => EXIT_DOMAIN,
        PrepareError::Model(m) => model_code(m),
    }
}

fn integrate_code(e: &IntegrateError) -> u8 {
    match e {
        IntegrateError::Prepare(p) => prepare_code(p),
        IntegrateError::Model(m) => model_code(m),
        IntegrateError::Oracle(q) => quad_code(q),
        _ => EXIT_DOMAIN,
    }
}

fn equidist_code(e: &EquidistError) -> u8 {
    match e {
        EquidistError::Quad(q) => quad_code(q),
        _ => EXIT_DOMAIN,
    }
}

fn classify(e: &(dyn StdError + 'static)) -> Option<u8> {
    if let Some(e) = e.downcast_ref::<IntegrateError>() {
        return Some(integrate_code(e));
    }
    if let Some(e) = e.downcast_ref::<PrepareError>() {
        return Some(prepare_code(e));
    }
    if let Some(e) = e.downcast_ref::<ModelError>() {
        return Some(model_code(e));
    }
    if let Some(e) = e.downcast_ref::<QuadError>() {
        return Some(quad_code(e));
    }
    if let Some(e) = e.downcast_ref::<EquidistError>() {
        return Some(equidist_code(e));
    }
    if let Some(e) = e.downcast_ref::<AsymptoticsError>() {
        return Some(match e {
            AsymptoticsError::NotNaive(_) => EXIT_DOMAIN,
            AsymptoticsError::Model(m) => model_code(m),
            AsymptoticsError::Prepare(p) => prepare_code(p),
            AsymptoticsError::Equidist(q) => equidist_code(q),
        });
    }
    e.downcast_ref::<ParamError>().map(|_| EXIT_DOMAIN)
}

/// Exit code for a failed command. Errors outside the library (malformed
/// options, unreadable files) are input errors.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain().find_map(classify).unwrap_or(EXIT_DOMAIN)
}

/// Message naming the library error; context added by the CLI comes last.
pub fn message(err: &anyhow::Error) -> String {
    let root = err.chain().find(|e| classify(*e).is_some()).map(ToString::to_string);
    match root {
        Some(r) if r != err.to_string() => format!("{r} ({err})"),
        Some(r) => r,
        None => format!("{err:#}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_to_fifteen_digits() {
        let v = normalize(json!({ "a": [0.1 + 0.2, 1.0 / 3.0], "b": 7, "c": -0.0 }));
        assert_eq!(v.to_string(), r#"{"a":[0.3,0.333333333333333],"b":7,"c":-0.0}"#);
        assert_eq!(format_float(std::f64::consts::PI), "3.14159265358979");
    }

    #[test]
    fn error_classes() {
        let e: anyhow::Error = QuadError::Tolerance { what: "x".into(), achieved: 1.0 }.into();
        assert_eq!(exit_code(&e), EXIT_TOLERANCE);
        let e: anyhow::Error = PrepareError::Internal("x".into()).into();
        assert_eq!(exit_code(&e), EXIT_INTERNAL);
        let e = anyhow::Error::from(EquidistError::DependentPhases("t, 2t".into())).context("cud");
        assert_eq!(exit_code(&e), EXIT_DOMAIN);
        assert_eq!(message(&e), "DependentPhases: t, 2t (cud)");
        assert_eq!(exit_code(&anyhow::anyhow!("bad flag")), EXIT_DOMAIN);
    }
}
