use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Builds from per-row `(column, value)` lists. Columns must be in range and
    /// not repeated within a row.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for (i, row) in rows.iter().enumerate() {
            let start = col_idx.len();
            for &(c, v) in row {
                if c >= cols {
                    return Err(Error::Validation(format!("row {i}: column {c} out of range {cols}")));
                }
                if col_idx[start..].contains(&c) {
                    return Err(Error::Validation(format!("row {i}: duplicate column {c}")));
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseOperator {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseOperator {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn max_row_len(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.iter().position(|&x| x == j).map_or(0.0, |p| v[p])
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, &w)| w * x[j]).sum();
        }
    }

    /// `f - A u`.
    pub fn residual(&self, f: &[f64], u: &[f64]) -> Vec<f64> {
        let mut r = self.apply(u);
        for (ri, fi) in r.iter_mut().zip(f) {
            *ri = fi - *ri;
        }
        r
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (i, row) in d.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &w) in c.iter().zip(v) {
                row[j] = w;
            }
        }
        d
    }

    /// Matrix Market coordinate format, 1-based indices.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::with_capacity(self.nnz() * 40 + 64);
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.rows, self.cols, self.nnz());
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &w) in c.iter().zip(v) {
                let _ = writeln!(s, "{} {} {:.17e}", i + 1, j + 1, w);
            }
        }
        s
    }

    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::nodeset::write_atomic(path.as_ref(), self.to_matrix_market().as_bytes())
    }
}
