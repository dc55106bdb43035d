//! CSV and JSON output for traces and archives.
//!
//! Floats are written with 17 significant digits so they read back exactly.
//! Active sets are written as `;`-separated zero-based indices.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::globalize::ParetoArchive;
use crate::solver::IterateTrace;

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let row: Vec<String> = cells.into_iter().collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

fn header(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

pub fn trace_csv(trace: &IterateTrace) -> String {
    let n = trace.records.first().map_or(0, |r| r.x.len());
    let m = trace.records.first().map_or(0, |r| r.f.len());
    let mut out = String::new();
    push_row(
        &mut out,
        std::iter::once("iter".to_string())
            .chain(header("x", n))
            .chain(header("F", m))
            .chain(["alpha", "branch", "t", "active_set"].map(String::from)),
    );
    for r in &trace.records {
        let active = r
            .active_set
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(";");
        push_row(
            &mut out,
            std::iter::once(r.iter.to_string())
                .chain(r.x.iter().map(|&v| fmt_f64(v)))
                .chain(r.f.iter().map(|&v| fmt_f64(v)))
                .chain([
                    fmt_f64(r.alpha),
                    r.branch.to_string(),
                    r.t.map(fmt_f64).unwrap_or_default(),
                    active,
                ]),
        );
    }
    out
}

/// One row per entry. Failed entries have empty objective cells.
pub fn archive_csv(archive: &ParetoArchive) -> String {
    let n = archive.entries.iter().map(|e| e.x.len()).max().unwrap_or(0);
    let m = archive.entries.iter().map(|e| e.f.len()).max().unwrap_or(0);
    let mut out = String::new();
    push_row(
        &mut out,
        header("x", n)
            .chain(header("F", m))
            .chain(["alpha", "converged", "dominated"].map(String::from)),
    );
    for e in &archive.entries {
        let mut f: Vec<String> = e.f.iter().map(|&v| fmt_f64(v)).collect();
        f.resize(m, String::new());
        push_row(
            &mut out,
            e.x.iter().map(|&v| fmt_f64(v)).chain(f).chain([
                fmt_f64(e.alpha),
                e.converged.to_string(),
                e.dominated.to_string(),
            ]),
        );
    }
    out
}

/// Pretty-printed JSON. Non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let v = serde_json::to_value(value)?;
    serde_json::to_string_pretty(&v)
}

pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, text)
}

/// Human-readable one-line summary of a trace.
pub fn trace_summary(trace: &IterateTrace) -> String {
    let mut s = String::new();
    let last = trace.records.last();
    let _ = write!(
        s,
        "{:?} after {} iterations",
        trace.termination,
        trace.iterations()
    );
    if let Some(r) = last {
        let _ = write!(s, ", alpha = {:.3e}", r.alpha);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{Branch, IterateRecord, Termination};

    #[test]
    fn trace_csv_layout() {
        let trace = IterateTrace {
            records: vec![
                IterateRecord {
                    iter: 0,
                    x: vec![0.5, -1.0],
                    f: vec![1.0, 2.0],
                    alpha: -0.25,
                    alpha2: None,
                    active_set: vec![0],
                    branch: Branch::ObjectiveIcs,
                    t: Some(0.1),
                    k: Some(0),
                    feasibility_repaired: false,
                },
                IterateRecord {
                    iter: 1,
                    x: vec![0.5, -1.0],
                    f: vec![1.0, 2.0],
                    alpha: 0.0,
                    alpha2: None,
                    active_set: vec![],
                    branch: Branch::Terminal,
                    t: None,
                    k: None,
                    feasibility_repaired: false,
                },
            ],
            termination: Termination::TerminatedCritical,
        };
        let csv = trace_csv(&trace);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "iter,x1,x2,F1,F2,alpha,branch,t,active_set");
        assert_eq!(
            lines[1],
            "0,5.0000000000000000e-1,-1.0000000000000000e0,1.0000000000000000e0,\
             2.0000000000000000e0,-2.5000000000000000e-1,SP1,1.0000000000000001e-1,0"
        );
        assert!(lines[2].ends_with(",NONE,,"));
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.0e-300, 123_456_789.123_456_78] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
