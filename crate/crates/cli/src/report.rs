//! Report document, exit codes and CSV flattening.

use std::collections::BTreeMap;

use kantorovich_core::{CostMatrix, Error, ExtReal};
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CERTIFICATE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// JSON number, or an `"inf"`/`"-inf"`/`"nan"` token.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else {
        serde_json::to_value(ExtReal::from_f64(v)).expect("extended reals serialize")
    }
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn matrix(a: &CostMatrix) -> Value {
    serde_json::to_value(a.rows()).expect("extended reals serialize")
}

pub fn dense(rows: usize, cols: usize, flat: &[f64]) -> Value {
    Value::Array((0..rows).map(|i| nums(&flat[i * cols..(i + 1) * cols])).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(serialize_with = "ser_num")]
    pub magnitude: f64,
    #[serde(serialize_with = "ser_num")]
    pub tol: f64,
}

fn ser_num<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    num(*v).serialize(s)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Certificates {
    pub fixed_point_residuals: BTreeMap<String, Value>,
    pub duality_gaps: BTreeMap<String, Value>,
    pub invariant_checks: Vec<Check>,
}

impl Certificates {
    /// Records `magnitude <= tol` as a named check.
    pub fn check(&mut self, name: &str, magnitude: f64, tol: f64) {
        self.invariant_checks.push(Check {
            name: name.to_string(),
            pass: magnitude <= tol,
            magnitude,
            tol,
        });
    }

    /// Records a boolean property; the magnitude is 0 on pass and 1 on failure.
    pub fn flag(&mut self, name: &str, pass: bool) {
        self.invariant_checks.push(Check {
            name: name.to_string(),
            pass,
            magnitude: if pass { 0.0 } else { 1.0 },
            tol: 0.0,
        });
    }

    pub fn residual(&mut self, name: &str, magnitude: f64, tol: f64) {
        self.fixed_point_residuals.insert(name.to_string(), num(magnitude));
        self.check(name, magnitude, tol);
    }

    pub fn gap(&mut self, name: &str, magnitude: f64, tol: f64) {
        self.duality_gaps.insert(name.to_string(), num(magnitude));
        self.check(&format!("{name} duality gap"), magnitude, tol);
    }

    pub fn all_pass(&self) -> bool {
        self.invariant_checks.iter().all(|c| c.pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub kind: String,
    pub message: String,
    pub witness: Value,
}

impl Failure {
    pub fn from_error(e: &Error) -> Self {
        let (kind, witness) = match e {
            Error::NoConvergence { iterations, residual } => {
                ("no_convergence", json!({ "iterations": iterations, "residual": num(*residual) }))
            }
            Error::NegativeCycle { cycle, weight } => {
                ("negative_cycle", json!({ "cycle": cycle, "weight": num(*weight) }))
            }
            Error::NoFiniteCycle => ("no_finite_cycle", Value::Null),
            Error::IndeterminateSum => ("indeterminate_sum", Value::Null),
            Error::CertificateUnavailable(why) => ("certificate_unavailable", json!({ "reason": why })),
            Error::PrimalInfinite => ("primal_infinite", Value::Null),
            Error::Infeasible => ("infeasible", Value::Null),
            Error::Unbounded => ("unbounded", Value::Null),
            _ => ("numeric", Value::Null),
        };
        Failure { kind: kind.to_string(), message: e.to_string(), witness }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub input_digest: String,
    pub results: Value,
    pub certificates: Certificates,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    pub timing: Option<Timing>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.failure.is_some() {
            EXIT_NUMERIC
        } else if self.certificates.all_pass() {
            EXIT_PASS
        } else {
            EXIT_CERTIFICATE
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// `key,value` rows; nested arrays flatten row-major into `key[i][j]`.
    pub fn to_csv(&self) -> String {
        let value = serde_json::to_value(self).expect("reports serialize");
        let mut out = String::from("key,value\n");
        flatten("", &value, &mut out);
        out
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), child, out);
            }
        }
        Value::String(s) => out.push_str(&format!("{},{}\n", csv_field(prefix), csv_field(s))),
        Value::Null => out.push_str(&format!("{},\n", csv_field(prefix))),
        other => out.push_str(&format!("{},{}\n", csv_field(prefix), other)),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_become_tokens() {
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(f64::NEG_INFINITY), json!("-inf"));
        assert_eq!(num(1.5), json!(1.5));
    }

    #[test]
    fn csv_flattens_row_major() {
        let r = Report {
            command: "x".into(),
            input_digest: "d".into(),
            results: json!({ "m": [[1, "inf"], [3, 4]] }),
            certificates: Certificates::default(),
            failure: None,
            timing: None,
        };
        let csv = r.to_csv();
        let rows: Vec<&str> = csv.lines().filter(|l| l.starts_with("results")).collect();
        assert_eq!(rows, ["results.m[0][0],1", "results.m[0][1],inf", "results.m[1][0],3", "results.m[1][1],4"]);
    }

    #[test]
    fn exit_code_follows_checks() {
        let mut c = Certificates::default();
        c.check("a", 0.0, 1e-9);
        let mut r = Report {
            command: "x".into(),
            input_digest: String::new(),
            results: Value::Null,
            certificates: c,
            failure: None,
            timing: None,
        };
        assert_eq!(r.exit_code(), EXIT_PASS);
        r.certificates.check("b", 1.0, 1e-9);
        assert_eq!(r.exit_code(), EXIT_CERTIFICATE);
        r.failure = Some(Failure::from_error(&Error::NoFiniteCycle));
        assert_eq!(r.exit_code(), EXIT_NUMERIC);
    }
}
