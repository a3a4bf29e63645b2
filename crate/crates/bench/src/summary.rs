use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::config::Method;
use crate::experiment::GapRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub function: String,
    pub method: String,
    pub mean: f64,
    /// Standard error of the mean; 0 for a single replicate.
    pub stderr: f64,
    pub count: usize,
    /// Highest mean gap for this function (ties all flagged).
    pub best: bool,
}

fn method_key(name: &str) -> MethodKey {
    (name.parse::<Method>().map(|m| m.rank()).unwrap_or((usize::MAX, 0)), name.to_string())
}

/// Divide each gap by the largest gap any method reached on the same
/// (function, seed); seeds where every gap is 0 are left alone.
pub fn normalize(records: &[GapRecord]) -> Vec<GapRecord> {
    let mut peak: BTreeMap<(&str, u64), f64> = BTreeMap::new();
    for r in records {
        let p = peak.entry((&r.function, r.seed)).or_insert(0.0);
        *p = p.max(r.gap);
    }
    records
        .iter()
        .map(|r| {
            let p = peak[&(r.function.as_str(), r.seed)];
            GapRecord {
                gap: if p > 0.0 { r.gap / p } else { r.gap },
                ..r.clone()
            }
        })
        .collect()
}

/// Standard column position, then the method name.
type MethodKey = ((usize, usize), String);

/// Mean gap, standard error and replicate count per (function, method).
pub fn summarize(records: &[GapRecord], normalized: bool) -> Vec<SummaryRow> {
    let records = if normalized { normalize(records) } else { records.to_vec() };
    let mut groups: BTreeMap<(String, MethodKey), Vec<f64>> = BTreeMap::new();
    for r in &records {
        groups
            .entry((r.function.clone(), method_key(&r.method)))
            .or_default()
            .push(r.gap);
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((function, (_, method)), gaps)| {
            let n = gaps.len() as f64;
            let mean = gaps.iter().sum::<f64>() / n;
            let stderr = if gaps.len() > 1 {
                (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                function,
                method,
                mean,
                stderr,
                count: gaps.len(),
                best: false,
            }
        })
        .collect();
    let mut top: BTreeMap<String, f64> = BTreeMap::new();
    for r in &rows {
        let t = top.entry(r.function.clone()).or_insert(f64::NEG_INFINITY);
        *t = t.max(r.mean);
    }
    for r in &mut rows {
        r.best = r.mean == top[&r.function];
    }
    rows
}

/// Functions down, methods across; the best mean of each row is starred.
pub fn render_table(rows: &[SummaryRow], normalized: bool) -> String {
    let methods: BTreeSet<((usize, usize), String)> = rows.iter().map(|r| method_key(&r.method)).collect();
    let functions: BTreeSet<&str> = rows.iter().map(|r| r.function.as_str()).collect();
    let cell = |f: &str, m: &str| {
        rows.iter()
            .find(|r| r.function == f && r.method == m)
            .map(|r| format!("{:.4}±{:.4}{}", r.mean, r.stderr, if r.best { "*" } else { "" }))
            .unwrap_or_else(|| "-".to_string())
    };
    let fn_width = functions.iter().map(|f| f.len()).max().unwrap_or(0).max("function".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "normalization: {}",
        if normalized { "per-seed max" } else { "off" }
    );
    let widths: Vec<usize> = methods
        .iter()
        .map(|(_, m)| functions.iter().map(|f| cell(f, m).chars().count()).max().unwrap_or(0).max(m.len()))
        .collect();
    let _ = write!(out, "{:<fn_width$}", "function");
    for ((_, m), w) in methods.iter().zip(&widths) {
        let _ = write!(out, "  {m:>w$}");
    }
    out.push('\n');
    for f in &functions {
        let _ = write!(out, "{f:<fn_width$}");
        for ((_, m), w) in methods.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", cell(f, m));
        }
        out.push('\n');
    }
    if let Some(n) = rows.iter().map(|r| r.count).max() {
        let _ = writeln!(out, "replicates per cell: up to {n}");
    }
    out
}
