//! Sparse matrix text format: a `rows cols nnz` header, then one
//! `row col value` triplet per line, zero-based.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use super::SparseVector;
use crate::error::{Error, Result};

pub fn write_sparse_matrix<W: Write>(rows: &[SparseVector], cols: usize, mut out: W) -> Result<()> {
    let nnz: usize = rows.iter().map(SparseVector::nnz).sum();
    if let Some(bad) = rows.iter().find(|r| r.min_dim() > cols) {
        return Err(Error::invalid(format!(
            "row has column {} but matrix has {cols} columns",
            bad.min_dim() - 1
        )));
    }
    writeln!(out, "{} {cols} {nnz}", rows.len())?;
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row.entries() {
            // shortest representation that parses back to the same f64
            writeln!(out, "{i} {j} {v:?}")?;
        }
    }
    Ok(())
}

/// Returns the rows and the column count.
pub fn read_sparse_matrix<R: BufRead>(reader: R) -> Result<(Vec<SparseVector>, usize)> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or(Error::Empty("sparse matrix file"))??;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::format(1, "header must be `rows cols nnz`"))?;
    let [n_rows, n_cols, nnz] = nums[..] else {
        return Err(Error::format(1, "header must be `rows cols nnz`"));
    };
    let mut triplets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows.min(1 << 20)];
    let mut seen = HashSet::new();
    let mut count = 0usize;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(r), Some(c), Some(v), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(Error::format(lineno, "expected `row col value`"));
        };
        let r: usize = r.parse().map_err(|_| Error::format(lineno, "bad row index"))?;
        let c: usize = c.parse().map_err(|_| Error::format(lineno, "bad column index"))?;
        let v: f64 = v.parse().map_err(|_| Error::format(lineno, "bad value"))?;
        if r >= n_rows || c >= n_cols {
            return Err(Error::format(lineno, format!("entry ({r}, {c}) outside {n_rows}x{n_cols}")));
        }
        if !v.is_finite() || v == 0.0 {
            return Err(Error::format(lineno, "values must be finite and non-zero"));
        }
        if !seen.insert((r, c)) {
            return Err(Error::format(lineno, format!("duplicate entry ({r}, {c})")));
        }
        count += 1;
        if count > nnz {
            return Err(Error::format(lineno, format!("more than {nnz} entries")));
        }
        if r >= triplets.len() {
            triplets.resize(r + 1, Vec::new());
        }
        triplets[r].push((c, v));
    }
    if count != nnz {
        return Err(Error::format(0, format!("header promises {nnz} entries, found {count}")));
    }
    triplets.resize(n_rows, Vec::new());
    Ok((triplets.into_iter().map(SparseVector::from_entries).collect(), n_cols))
}
