//! Plain CSV matrices: comma separated, one observation per row, optional
//! header line. Numbers are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ebcd_core::DenseMatrix;
use nalgebra::DMatrix;

use crate::error::CliError;

pub fn read_matrix(path: &Path, header: bool) -> Result<DenseMatrix, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        if ncols.is_some_and(|c| c != record.len()) {
            return Err(CliError::input(format!("{}: row {} has {} fields", path.display(), i + 1, record.len())));
        }
        ncols = Some(record.len());
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::input(format!("{}: row {}: not a number: {field:?}", path.display(), i + 1)))?;
            if !v.is_finite() {
                return Err(CliError::input(format!("{}: row {}: non-finite value", path.display(), i + 1)));
            }
            values.push(v);
        }
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| CliError::input(format!("{}: no data", path.display())))?;
    Ok(DMatrix::from_row_slice(nrows, ncols, &values))
}

pub fn format_number(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
        writeln!(out, "{}", line.join(",")).map_err(CliError::io)?;
    }
    out.flush().map_err(CliError::io)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Rows of a matrix, for JSON.
pub fn to_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>], what: &str) -> Result<DenseMatrix, CliError> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::input(format!("{what}: ragged rows")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}
