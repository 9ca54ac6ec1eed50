//! Report rows and their machine (CSV, JSON lines) and human renderings.
//!
//! CSV is the primary format: one fixed header, comma separators,
//! `.` decimal point, floats in scientific notation via Rust's shortest
//! round-trip formatting (locale-free and bit-deterministic). The JSONL
//! mirror carries one object per row with identical field names.

use serde::Serialize;

pub const CSV_HEADER: &str =
    "kind,id,n,grid,max_abs_residual,mean_abs_residual,predicted_gap,verdict,notes";

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub kind: String,
    pub id: String,
    pub n: usize,
    pub grid: usize,
    pub max_abs_residual: Option<f64>,
    pub mean_abs_residual: Option<f64>,
    pub predicted_gap: Option<f64>,
    pub verdict: String,
    pub notes: String,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Commas and newlines would break the unquoted CSV cells.
pub fn sanitize_notes(notes: &str) -> String {
    notes.replace(['\n', '\r'], " ").replace(',', ";")
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.kind,
            r.id,
            r.n,
            r.grid,
            fmt_opt(r.max_abs_residual),
            fmt_opt(r.mean_abs_residual),
            fmt_opt(r.predicted_gap),
            r.verdict,
            sanitize_notes(&r.notes),
        ));
    }
    out
}

pub fn to_jsonl(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("row serializes"));
        out.push('\n');
    }
    out
}

/// Fixed-width table for standard output.
pub fn to_table(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<13} {:<22} {:>2} {:>7}  {:>13} {:>13} {:>13}  {:<18} {}\n",
        "kind", "id", "n", "grid", "max|res|", "mean|res|", "gap", "verdict", "notes"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<13} {:<22} {:>2} {:>7}  {:>13} {:>13} {:>13}  {:<18} {}\n",
            r.kind,
            r.id,
            r.n,
            r.grid,
            short(r.max_abs_residual),
            short(r.mean_abs_residual),
            short(r.predicted_gap),
            r.verdict,
            r.notes,
        ));
    }
    out
}

fn short(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into())
}
