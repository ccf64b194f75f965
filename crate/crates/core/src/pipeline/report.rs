//! CSV and JSON renderings of run results.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::protocol::TableRow;
use super::sweep::SweepResult;
use crate::error::{Error, Result};

pub const TABLE_HEADER: &str = "Method,Classifier,Training/Testing,Sens,Spec,Acc";
pub const SWEEP_HEADER: &str = "axis_value,kind,sens,spec,acc";

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.2}"))
}

fn quoted(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Percent values with two decimals; undefined metrics print as `NA`.
pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.2}",
            quoted(&r.method),
            quoted(&r.classifier),
            quoted(&r.training_testing),
            cell(r.sensitivity),
            cell(r.specificity),
            r.accuracy
        );
    }
    out
}

/// One row per (kind, axis value); metrics are fractions in [0, 1].
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in &result.points {
        let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6}",
            p.axis_value,
            quoted(&p.kind),
            f(p.aggregate.sensitivity),
            f(p.aggregate.specificity),
            p.aggregate.accuracy
        );
    }
    out
}

pub fn to_json<T: Serialize>(value: &T, what: &str) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        what: what.to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json(value, &path.display().to_string())?;
    text.push('\n');
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let rows = [TableRow {
            method: "LSTM".into(),
            classifier: "Softmax".into(),
            training_testing: "10-folds cross-validation".into(),
            sensitivity: Some(100.0),
            specificity: None,
            accuracy: 99.5,
        }];
        assert_eq!(
            table_csv(&rows),
            "Method,Classifier,Training/Testing,Sens,Spec,Acc\nLSTM,Softmax,10-folds cross-validation,100.00,NA,99.50\n"
        );
    }

    #[test]
    fn quoting() {
        assert_eq!(quoted("a,b"), "\"a,b\"");
        assert_eq!(quoted("say \"x\", y"), "\"say \"\"x\"\", y\"");
        assert_eq!(quoted("plain"), "plain");
    }
}
