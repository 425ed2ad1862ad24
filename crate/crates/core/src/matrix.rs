//! Dense square matrices stored row-major.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    values: Vec<f64>,
    symmetric: bool,
}

impl DataMatrix {
    pub fn zeros(n: usize, symmetric: bool) -> Self {
        Self {
            n,
            values: vec![0.0; n * n],
            symmetric,
        }
    }

    /// Wraps row-major values. With `symmetric` set the transpose must agree exactly.
    pub fn from_row_major(n: usize, values: Vec<f64>, symmetric: bool) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n}x{n} matrix",
                values.len()
            )));
        }
        let m = Self {
            n,
            values,
            symmetric,
        };
        if symmetric {
            m.check_symmetric()?;
        }
        Ok(m)
    }

    /// Builds a symmetric matrix from its upper triangle (diagonal included).
    pub fn symmetric_from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n, true);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.values[i * n + j] = v;
                m.values[j * n + i] = v;
            }
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n, false);
        for i in 0..n {
            for j in 0..n {
                m.values[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(M²) = Σ_ij M_ij M_ji`.
    pub fn trace_of_square(&self) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.get(i, j) * self.get(j, i);
            }
        }
        acc
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|&v| f(v)).collect(),
            symmetric: self.symmetric,
        }
    }

    /// Exact entrywise symmetry check of the stored values.
    pub fn check_symmetric(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                if self.get(i, j) != self.get(j, i) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// Writes one row per line, full square, shortest round-trip decimal form.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(csv_err)?;
        for i in 0..self.n {
            w.write_record(self.row(i).iter().map(|v| v.to_string()))
                .map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads a square CSV matrix. The symmetric flag is set when the values are exactly
    /// symmetric.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(csv_err)?;
        let mut values = Vec::new();
        let mut rows = 0;
        for record in r.records() {
            let record = record.map_err(csv_err)?;
            for field in record.iter() {
                values.push(field.parse::<f64>().map_err(|e| {
                    Error::invalid(format!("{}: row {}: `{field}`: {e}", path.display(), rows + 1))
                })?);
            }
            rows += 1;
        }
        if values.len() != rows * rows {
            return Err(Error::DimensionMismatch(format!(
                "{}: {rows} rows but {} values",
                path.display(),
                values.len()
            )));
        }
        let mut m = Self::from_row_major(rows, values, false)?;
        m.symmetric = m.check_symmetric().is_ok();
        Ok(m)
    }
}
