//! Minimal CSV reading/writing for the fixed schemas this tool speaks.
//!
//! All files are comma-separated with a mandatory header row and plain
//! numeric cells (no quoting, no embedded commas).  Floats are written
//! with Rust's shortest-round-trip formatting, which keeps output files
//! byte-deterministic for identical inputs.

use std::io::Write;
use std::path::Path;

use crate::error::CliError;

pub struct Table {
    pub columns: Vec<String>,
    /// Row-major cells; every row has `columns.len()` entries.
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut out = Vec::with_capacity(64 * (self.rows.len() + 1));
        writeln!(out, "{}", self.columns.join(",")).expect("vec write");
        for row in &self.rows {
            let mut first = true;
            for cell in row {
                if !first {
                    out.push(b',');
                }
                write!(out, "{cell}").expect("vec write");
                first = false;
            }
            out.push(b'\n');
        }
        std::fs::write(path, out)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
    }

    /// JSON rendering: an array of objects keyed by column name.
    pub fn write_json(&self, path: &Path) -> Result<(), CliError> {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|row| {
                self.columns
                    .iter()
                    .zip(row)
                    .map(|(name, cell)| (name.clone(), json_number(*cell)))
                    .collect()
            })
            .collect();
        let text = serde_json::to_string_pretty(&rows).expect("table serializes");
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
    }
}

/// JSON has no Infinity/NaN; encode those as strings so files stay valid.
fn json_number(value: f64) -> serde_json::Value {
    serde_json::Number::from_f64(value)
        .map(serde_json::Value::Number)
        .unwrap_or_else(|| serde_json::Value::String(value.to_string()))
}

/// Read a numeric CSV with the given minimum column count.  Returns the
/// header names and row-major cells.  Extra columns are allowed and read.
pub fn read_numeric_csv(
    path: &Path,
    min_columns: usize,
) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Validation(format!("{}: empty file", path.display())))?;
    let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if columns.len() < min_columns {
        return Err(CliError::Validation(format!(
            "{}: expected at least {min_columns} columns, header has {}",
            path.display(),
            columns.len()
        )));
    }
    let mut rows = Vec::new();
    for (index, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(columns.len());
        for cell in line.split(',') {
            let value: f64 = cell.trim().parse().map_err(|_| {
                CliError::Validation(format!(
                    "{}:{}: '{}' is not a number",
                    path.display(),
                    index + 1,
                    cell.trim()
                ))
            })?;
            row.push(value);
        }
        if row.len() != columns.len() {
            return Err(CliError::Validation(format!(
                "{}:{}: expected {} cells, found {}",
                path.display(),
                index + 1,
                columns.len(),
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok((columns, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut table = Table::new(vec!["a".into(), "b".into()]);
        table.push_row(vec![1.0, 0.1 + 0.2]);
        table.push_row(vec![-3.5e-19, f64::MAX]);
        table.write_csv(&path).unwrap();
        let first = std::fs::read(&path).unwrap();
        table.write_csv(&path).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());

        let (cols, rows) = read_numeric_csv(&path, 2).unwrap();
        assert_eq!(cols, ["a", "b"]);
        assert_eq!(rows[0][1], 0.1 + 0.2);
        assert_eq!(rows[1][0], -3.5e-19);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1.0\n").unwrap();
        assert!(read_numeric_csv(&path, 2).is_err());
        std::fs::write(&path, "a,b\n1.0,x\n").unwrap();
        assert!(read_numeric_csv(&path, 2).is_err());
        std::fs::write(&path, "").unwrap();
        assert!(read_numeric_csv(&path, 1).is_err());
    }
}
