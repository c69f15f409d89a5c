//! CSV tables with 17 significant digits and the line-oriented check summary.

use crate::error::{Result, WeylError};
use serde::Serialize;
use serde_json::Value;
use std::fmt;
use std::io::Write;

/// Shortest text that names an `f64` exactly: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let name = if prefix.is_empty() { k.clone() } else { format!("{prefix}_{k}") };
                flatten(&name, x, out);
            }
        }
        // complex pairs are stored as (re, im)
        Value::Array(items) if items.len() == 2 && items.iter().all(Value::is_number) => {
            flatten(&format!("{prefix}_re"), &items[0], out);
            flatten(&format!("{prefix}_im"), &items[1], out);
        }
        Value::Array(items) => {
            for (k, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}_{k}"), x, out);
            }
        }
        Value::Number(n) => {
            let text = if n.is_f64() { fmt_f64(n.as_f64().unwrap_or(f64::NAN)) } else { n.to_string() };
            out.push((prefix.into(), text));
        }
        Value::Null => out.push((prefix.into(), "nan".into())),
        Value::Bool(b) => out.push((prefix.into(), b.to_string())),
        Value::String(s) => out.push((prefix.into(), s.clone())),
    }
}

fn io_err(e: impl fmt::Display) -> WeylError {
    WeylError::Config { key: "output".into(), msg: e.to_string() }
}

/// Header from the field order of the first record; nested fields are joined with `_`.
pub fn write_csv<T: Serialize, W: Write>(records: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Option<Vec<String>> = None;
    for rec in records {
        let v = serde_json::to_value(rec).map_err(io_err)?;
        let mut cells = Vec::new();
        flatten("", &v, &mut cells);
        let names: Vec<String> = cells.iter().map(|c| c.0.clone()).collect();
        match &header {
            None => {
                w.write_record(&names).map_err(io_err)?;
                header = Some(names);
            }
            Some(h) if *h != names => return Err(io_err(format!("record columns {names:?} differ from header {h:?}"))),
            Some(_) => {}
        }
        w.write_record(cells.iter().map(|c| &c.1)).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn csv_string<T: Serialize>(records: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    String::from_utf8(buf).map_err(io_err)
}

/// One assertion; `margin >= 0` means it holds with that much room.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, margin: f64, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass: margin >= 0.0, margin, detail: detail.into() }
    }

    /// A check that failed before producing a margin.
    pub fn error(name: impl Into<String>, err: &WeylError) -> Self {
        Check { name: name.into(), pass: false, margin: f64::NEG_INFINITY, detail: err.to_string() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "CHECK {} {verdict} margin={}", self.name, fmt_f64(self.margin))
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        r: f64,
        q: (f64, f64),
        n: u32,
        tag: &'static str,
    }

    #[test]
    fn header_and_round_trip() {
        let x = 0.1 + 0.2;
        let s = csv_string(&[Row { r: x, q: (1.0, -2.5), n: 3, tag: "a,b" }]).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("r,q_re,q_im,n,tag"));
        let row = lines.next().unwrap();
        let first: f64 = row.split(',').next().unwrap().parse().unwrap();
        assert_eq!(first.to_bits(), x.to_bits());
        assert!(row.ends_with("3,\"a,b\""));
    }

    #[test]
    fn summary_line() {
        let c = Check::new("band", 0.5, "");
        assert_eq!(c.to_string(), "CHECK band PASS margin=5.0000000000000000e-1");
        assert!(!Check::new("x", -1e-3, "").pass);
    }
}
