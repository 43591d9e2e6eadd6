//! Matrix Market coordinate files and plain-text vectors.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cwm_core::SparseMatrix;
use nalgebra_sparse::io::load_coo_from_matrix_market_str;

use crate::error::{Error, Result, Tag};

/// Reads a real coordinate file; symmetric storage is expanded.
pub fn read_matrix_market(path: &Path) -> Result<SparseMatrix> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    parse_matrix_market(&text, path)
}

pub fn parse_matrix_market(text: &str, path: &Path) -> Result<SparseMatrix> {
    let header = text.lines().next().unwrap_or("").to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" {
        return Err(Error::parse(path, 1, "missing %%MatrixMarket header"));
    }
    if fields[2] != "coordinate" {
        return Err(Error::parse(path, 1, "coordinate format required"));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(Error::parse(path, 1, "real entries required"));
    }
    let coo = load_coo_from_matrix_market_str::<f64>(text).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let trip: Vec<(usize, usize, f64)> = coo.triplet_iter().map(|(i, j, &v)| (i, j, v)).collect();
    SparseMatrix::from_triplets(coo.nrows(), coo.ncols(), &trip).tag("sparse")
}

/// Writes the matrix with 17 significant digits, lower triangle only when `symmetric`.
pub fn write_matrix_market(path: &Path, a: &SparseMatrix, symmetric: bool) -> Result<()> {
    fs::write(path, format_matrix_market(a, symmetric)).map_err(Error::io(path))
}

pub fn format_matrix_market(a: &SparseMatrix, symmetric: bool) -> String {
    let mut entries = Vec::with_capacity(a.nnz());
    for i in 0..a.rows() {
        let (c, v) = a.row(i);
        for (&j, &x) in c.iter().zip(v) {
            if !symmetric || j <= i {
                entries.push((i, j, x));
            }
        }
    }
    let kind = if symmetric { "symmetric" } else { "general" };
    let mut s = format!("%%MatrixMarket matrix coordinate real {kind}\n{} {} {}\n", a.rows(), a.cols(), entries.len());
    for (i, j, x) in entries {
        let _ = writeln!(s, "{} {} {:.16e}", i + 1, j + 1, x);
    }
    s
}

/// One value per line; blank lines and lines starting with `#` or `%` are skipped.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut v = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let x: f64 = t.parse().map_err(|_| Error::parse(path, k + 1, format!("not a number: {t}")))?;
        if !x.is_finite() {
            return Err(Error::parse(path, k + 1, "non-finite value"));
        }
        v.push(x);
    }
    Ok(v)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut s = String::with_capacity(24 * v.len());
    for x in v {
        let _ = writeln!(s, "{x:.16e}");
    }
    fs::write(path, s).map_err(Error::io(path))
}
