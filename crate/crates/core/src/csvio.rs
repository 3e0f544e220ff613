//! CSV emission and parsing for sample matrices and spectra.
//!
//! Format: header row, decimal text with '.' radix, LF line endings, one row
//! per sample with D columns. Values are written with Rust's shortest
//! round-trip float formatting, so write→read is bit-exact.

use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::CovarianceSpectrum;

/// Write an N×D matrix with header `x1,...,xD`.
pub fn write_matrix<T: Scalar>(path: &Path, m: &Array2<T>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let header: Vec<String> = (1..=m.ncols()).map(|j| format!("x{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a matrix written by [`write_matrix`] (header skipped).
pub fn read_matrix<T: Scalar>(path: &Path) -> Result<Array2<T>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<T>()
                    .map_err(|_| Error::Io(format!("line {}: bad value {cell:?}", i + 1)))
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Io("no data rows".into()));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Io("ragged rows".into()));
    }
    let flat: Vec<T> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((flat.len() / d, d), flat)
        .map_err(|e| Error::Io(format!("shape: {e}")))
}

/// Write a spectrum as a single CSV row with header `c1,...,cD`.
pub fn write_spectrum<T: Scalar>(path: &Path, s: &CovarianceSpectrum<T>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let header: Vec<String> = (1..=s.dim()).map(|j| format!("c{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    let cells: Vec<String> = s.eigenvalues().iter().map(|v| format!("{v}")).collect();
    writeln!(w, "{}", cells.join(","))?;
    w.flush()?;
    Ok(())
}

/// Write (key, value) trace rows, e.g. `iteration,loss`.
pub fn write_trace<T: Scalar>(path: &Path, header: &str, rows: &[(usize, T)]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{header}")?;
    for (i, v) in rows {
        writeln!(w, "{i},{v}")?;
    }
    w.flush()?;
    Ok(())
}
