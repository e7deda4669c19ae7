//! CSV ingestion and deterministic report writing.

use crate::CliError;

/// Reads a measurement CSV: optional `#` comment lines and blank lines are
/// skipped, the first content line must be the header `k,y`, and data rows
/// must carry a consecutive 0-based index and a finite value. Errors cite
/// the 1-based file line.
pub fn read_measurements(path: &str) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read measurement CSV {path}: {e}")))?;
    let mut values: Vec<f64> = Vec::new();
    let mut saw_header = false;
    for (i, raw) in text.lines().enumerate() {
        let row = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != "k,y" {
                return Err(CliError::Config(format!(
                    "measurement CSV {path}: row {row}: expected header `k,y`, found `{line}`"
                )));
            }
            saw_header = true;
            continue;
        }
        let Some((k_cell, y_cell)) = line.split_once(',') else {
            return Err(CliError::Config(format!(
                "measurement CSV {path}: row {row}: expected two comma-separated fields, \
                 found `{line}`"
            )));
        };
        let k: usize = k_cell.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "measurement CSV {path}: row {row}: non-numeric sample index `{}`",
                k_cell.trim()
            ))
        })?;
        if k != values.len() {
            return Err(CliError::Config(format!(
                "measurement CSV {path}: row {row}: sample index {k} out of order \
                 (expected {})",
                values.len()
            )));
        }
        let y: f64 = y_cell.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "measurement CSV {path}: row {row}: non-numeric value `{}`",
                y_cell.trim()
            ))
        })?;
        if !y.is_finite() {
            return Err(CliError::Config(format!(
                "measurement CSV {path}: row {row}: non-finite value `{}`",
                y_cell.trim()
            )));
        }
        values.push(y);
    }
    if !saw_header {
        return Err(CliError::Config(format!(
            "measurement CSV {path}: missing header `k,y`"
        )));
    }
    if values.is_empty() {
        return Err(CliError::Config(format!(
            "measurement CSV {path}: no data rows"
        )));
    }
    Ok(values)
}

/// Assembles a report: one `#` provenance comment, a column header, then
/// the data rows — and writes it to `out` (or stdout when `out` is None)
/// as a single deterministic byte sequence.
pub fn write_report(
    out: Option<&str>,
    comment_line: &str,
    columns: &str,
    rows: &[String],
) -> Result<(), CliError> {
    let mut text = String::new();
    text.push_str(comment_line);
    text.push('\n');
    text.push_str(columns);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {path}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
