//! Per-pass report records: one line per pass, `key=value` fields in a fixed
//! order, `NA` for absent values.

use contilearn_core::IterationReport;

use crate::error::{CliError, CliResult};
use crate::modelfile::fmt_real;

pub const FIELDS: [&str; 10] = [
    "iteration",
    "dim",
    "k",
    "expanded_dim",
    "precision",
    "oob",
    "best_ll",
    "embedded_ll",
    "accuracy",
    "closure",
];

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_else(|| "NA".to_owned())
}

pub fn format_record(r: &IterationReport) -> String {
    let values = [
        r.iteration.to_string(),
        r.dim.to_string(),
        opt(r.selected_k, |k| k.to_string()),
        opt(r.expanded_dim, |k| k.to_string()),
        fmt_real(r.precision),
        fmt_real(r.oob_score),
        fmt_real(r.best_log_likelihood),
        fmt_real(r.embedded_log_likelihood),
        fmt_real(r.accuracy),
        opt(r.closure_residual, fmt_real),
    ];
    FIELDS
        .iter()
        .zip(values)
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn format_reports(reports: &[IterationReport]) -> String {
    reports.iter().map(|r| format_record(r) + "\n").collect()
}

/// Parses one record back into a report.
pub fn parse_record(line: &str) -> CliResult<IterationReport> {
    let parts: Vec<(&str, &str)> = line
        .split_whitespace()
        .map(|kv| kv.split_once('=').unwrap_or((kv, "")))
        .collect();
    let names: Vec<&str> = parts.iter().map(|p| p.0).collect();
    if names != FIELDS {
        return Err(CliError::Model(format!("malformed report record {line:?}")));
    }
    let bad = |v: &str| CliError::Model(format!("bad report value {v:?}"));
    let int = |v: &str| v.parse::<usize>().map_err(|_| bad(v));
    let real = |v: &str| v.parse::<f64>().map_err(|_| bad(v));
    let opt_int = |v: &str| {
        if v == "NA" {
            Ok(None)
        } else {
            int(v).map(Some)
        }
    };
    let v: Vec<&str> = parts.iter().map(|p| p.1).collect();
    Ok(IterationReport {
        iteration: int(v[0])?,
        dim: int(v[1])?,
        selected_k: opt_int(v[2])?,
        expanded_dim: opt_int(v[3])?,
        precision: real(v[4])?,
        oob_score: real(v[5])?,
        best_log_likelihood: real(v[6])?,
        embedded_log_likelihood: real(v[7])?,
        accuracy: real(v[8])?,
        closure_residual: if v[9] == "NA" {
            None
        } else {
            Some(real(v[9])?)
        },
    })
}
