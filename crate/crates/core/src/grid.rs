//! Plain-text numeric grids.
//!
//! One matrix row per line, values separated by commas, each value printed
//! with the shortest representation that parses back to the same `f64`.
//! Output is byte-deterministic.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::{Error, Result};

pub fn format_rows<'a, I, R>(rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = &'a f64>,
{
    let mut out = String::new();
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            write!(out, "{v}").expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

pub fn format_matrix(matrix: &DMatrix<f64>) -> String {
    let rows: Vec<Vec<f64>> = matrix.row_iter().map(|r| r.iter().copied().collect()).collect();
    format_rows(rows.iter())
}

pub fn format_vector(values: &[f64]) -> String {
    format_rows(std::iter::once(values))
}

pub fn write_matrix(path: &Path, matrix: &DMatrix<f64>) -> Result<()> {
    std::fs::write(path, format_matrix(matrix)).map_err(|e| Error::io(path, e))
}

pub fn write_vector(path: &Path, values: &[f64]) -> Result<()> {
    std::fs::write(path, format_vector(values)).map_err(|e| Error::io(path, e))
}

/// Parses a grid written by this module (any whitespace or comma separation).
pub fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            line.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::Image(format!("bad number {t:?} in grid: {e}")))
                })
                .collect()
        })
        .collect()
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = parse_rows(&text)?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch(format!(
            "{}: ragged grid",
            path.display()
        )));
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.into_iter().flatten(),
    ))
}

/// Reads every number in the file as one flat vector.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_rows(&text)?.into_iter().flatten().collect())
}
