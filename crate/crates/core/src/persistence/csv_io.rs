//! CSV tables: diagnostics rows and study outputs.
//!
//! Numbers are written as `{:.16e}` (17 significant digits), which parses
//! back to the same `f64`.

use std::fs::{self, OpenOptions};
use std::path::Path;

use crate::analysis::{AuditReport, DiagnosticsRecord};
use crate::error::{Result, SqgError};

pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(path: &Path, e: csv::Error) -> SqgError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SqgError::io(path, io),
        other => SqgError::Format(format!("{}: {other:?}", path.display())),
    }
}

/// Writes a fresh table, replacing any existing file.
pub fn write_table(path: &Path, columns: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(columns).map_err(|e| csv_error(path, e))?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(SqgError::Shape(format!(
                "row of {} values for {} columns",
                row.len(),
                columns.len()
            )));
        }
        w.write_record(row.iter().map(|v| format_number(*v)))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| SqgError::io(path, e))
}

/// Header and rows of a numeric table.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    SqgError::Format(format!("{}: row {}: `{s}` is not a number", path.display(), line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn diagnostics_header() -> Vec<String> {
    DiagnosticsRecord::COLUMNS.iter().map(|s| s.to_string()).collect()
}

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let rows: Vec<Vec<f64>> = records.iter().map(|r| r.to_array().to_vec()).collect();
    write_table(path, &diagnostics_header(), &rows)
}

/// Appends one row, writing the header first if the file is new or empty.
/// Refuses to append to a file whose header differs.
pub fn append_diagnostics(record: &DiagnosticsRecord, path: &Path) -> Result<()> {
    let existing = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(SqgError::io(path, e)),
    };
    let header = DiagnosticsRecord::COLUMNS.join(",");
    let fresh = existing.trim().is_empty();
    if !fresh {
        let first = existing.lines().next().unwrap_or("").trim_end_matches('\r');
        if first != header {
            return Err(SqgError::Format(format!(
                "{}: refusing to append, header `{first}` is not the diagnostics header",
                path.display()
            )));
        }
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| SqgError::io(path, e))?;
    let mut w = csv::WriterBuilder::new().from_writer(file);
    if fresh {
        w.write_record(DiagnosticsRecord::COLUMNS)
            .map_err(|e| csv_error(path, e))?;
    }
    w.write_record(record.to_array().iter().map(|v| format_number(*v)))
        .map_err(|e| csv_error(path, e))?;
    w.flush().map_err(|e| SqgError::io(path, e))
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let (header, rows) = read_table(path)?;
    if header != diagnostics_header() {
        return Err(SqgError::Format(format!(
            "{}: not a diagnostics file (header `{}`)",
            path.display(),
            header.join(",")
        )));
    }
    rows.into_iter()
        .map(|r| {
            let arr: [f64; 9] = r
                .try_into()
                .map_err(|_| SqgError::Format(format!("{}: short diagnostics row", path.display())))?;
            Ok(DiagnosticsRecord::from_array(arr))
        })
        .collect()
}

/// Machine summary: one line per audit, `name PASS|FAIL label=value`.
pub fn write_summary(path: &Path, reports: &[AuditReport]) -> Result<()> {
    let mut text = String::new();
    for r in reports {
        text.push_str(&r.summary_line());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| SqgError::io(path, e))
}
