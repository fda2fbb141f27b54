//! Compressed sparse rows and an envelope Cholesky factorization.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; n_rows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (r, c, v) in t {
            debug_assert!(r < n_rows && c < n_cols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            indptr[r + 1] += indptr[r];
        }
        Self { n_rows, n_cols, indptr, indices, values }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = self.indptr[r]..self.indptr[r + 1];
        self.indices[s.clone()].iter().cloned().zip(self.values[s].iter().cloned())
    }

    /// `y = A x`.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n_rows) {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// `y = Aᵀ x`.
    pub fn mul_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.n_rows {
            let xr = x[r];
            if xr != 0.0 {
                for (c, v) in self.row(r) {
                    y[c] += v * xr;
                }
            }
        }
    }
}

/// Cholesky factor `L` of a symmetric positive definite matrix, stored row by
/// row from the first structurally nonzero column to the diagonal.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors the symmetric matrix `a`; only entries with `col ≤ row` are read.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(Error::Shape("Cholesky needs a square matrix".into()));
        }
        let mut first = vec![0; n];
        for (r, f) in first.iter_mut().enumerate() {
            *f = a.row(r).map(|(c, _)| c).filter(|&c| c <= r).min().unwrap_or(r);
        }
        let mut start = vec![0; n + 1];
        for r in 0..n {
            start[r + 1] = start[r] + (r - first[r] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for r in 0..n {
            for (c, v) in a.row(r) {
                if c <= r {
                    data[start[r] + c - first[r]] = v;
                }
            }
        }
        for i in 0..n {
            let (fi, si) = (first[i], start[i]);
            for j in fi..i {
                let (fj, sj) = (first[j], start[j]);
                let k0 = fi.max(fj);
                let mut s = data[si + j - fi];
                let (ri, rj) = (&data[si + k0 - fi..si + j - fi], &data[sj + k0 - fj..sj + j - fj]);
                s -= ri.iter().zip(rj).map(|(x, y)| x * y).sum::<f64>();
                data[si + j - fi] = s / data[sj + j - fj];
            }
            let row = &data[si..si + i - fi];
            let d = data[si + i - fi] - row.iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::InvariantViolation(format!("matrix is not positive definite (pivot {i}: {d:e})")));
            }
            data[si + i - fi] = d.sqrt();
        }
        Ok(Self { first, start, data })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Number of stored entries of `L`.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    /// Solves `L Lᵀ x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let (fi, si) = (self.first[i], self.start[i]);
            let row = &self.data[si..si + i - fi];
            let s: f64 = row.iter().zip(&x[fi..i]).map(|(l, v)| l * v).sum();
            x[i] = (x[i] - s) / self.data[si + i - fi];
        }
        for i in (0..n).rev() {
            let (fi, si) = (self.first[i], self.start[i]);
            x[i] /= self.data[si + i - fi];
            let xi = x[i];
            if xi != 0.0 {
                for (l, v) in self.data[si..si + i - fi].iter().zip(&mut x[fi..i]) {
                    *v -= l * xi;
                }
            }
        }
    }
}
