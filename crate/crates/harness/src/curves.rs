//! Loss-curve CSV files: one row per recorded iteration, floats written with
//! 17 significant digits so they parse back to the same bits.

use std::cmp::Ordering;
use std::path::Path;

use bsum::TrainTrace;

use crate::error::HarnessError;

pub const CURVE_HEADER: [&str; 8] = [
    "method",
    "seed",
    "k",
    "f",
    "normalized_mse",
    "grad_norm",
    "alpha",
    "wall_seconds",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub method: String,
    pub seed: u64,
    pub k: usize,
    pub f: f64,
    pub normalized_mse: f64,
    pub grad_norm: f64,
    pub alpha: f64,
    pub wall_seconds: f64,
}

/// One trace with the labels it is written under.
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    pub method: &'a str,
    pub seed: u64,
    pub trace: &'a TrainTrace,
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn order(a: &CurveRow, b: &CurveRow) -> Ordering {
    a.method.cmp(&b.method).then(a.seed.cmp(&b.seed)).then(a.k.cmp(&b.k))
}

/// Rows of every series, grouped by method, then seed, then `k`.
pub fn curve_rows(series: &[Series<'_>]) -> Vec<CurveRow> {
    let mut rows: Vec<CurveRow> = series
        .iter()
        .flat_map(|s| {
            s.trace.all().map(move |r| CurveRow {
                method: s.method.to_string(),
                seed: s.seed,
                k: r.k,
                f: r.f,
                normalized_mse: r.normalized_mse,
                grad_norm: r.grad_norm,
                alpha: r.alpha,
                wall_seconds: r.wall_seconds,
            })
        })
        .collect();
    rows.sort_by(order);
    rows
}

pub fn emit_curves(series: &[Series<'_>], path: &Path) -> Result<(), HarnessError> {
    write_rows(&curve_rows(series), path)
}

/// Writes `rows` in the given order (LF line ends, UTF-8).
pub fn write_rows(rows: &[CurveRow], path: &Path) -> Result<(), HarnessError> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => HarnessError::io(path, e),
        other => HarnessError::Curve {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(io)?;
    w.write_record(CURVE_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.seed.to_string(),
            r.k.to_string(),
            format_float(r.f),
            format_float(r.normalized_mse),
            format_float(r.grad_norm),
            format_float(r.alpha),
            format_float(r.wall_seconds),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn parse_curves(path: &Path) -> Result<Vec<CurveRow>, HarnessError> {
    let bad = |message: String| HarnessError::Curve {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(CURVE_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let float = |i: usize| -> Result<f64, HarnessError> {
            rec[i]
                .parse()
                .map_err(|_| bad(format!("line {line}: {:?} is not a number", &rec[i])))
        };
        rows.push(CurveRow {
            method: rec[0].to_string(),
            seed: rec[1].parse().map_err(|_| bad(format!("line {line}: bad seed")))?,
            k: rec[2].parse().map_err(|_| bad(format!("line {line}: bad k")))?,
            f: float(3)?,
            normalized_mse: float(4)?,
            grad_norm: float(5)?,
            alpha: float(6)?,
            wall_seconds: float(7)?,
        });
    }
    Ok(rows)
}
