//! Compressed sparse row storage.

use std::fmt::Write as _;

use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Square `n×n` matrix from `(row, col, value)` triplets; duplicates are
    /// summed. Columns are sorted within each row.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, T)>) -> Self {
        trip.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<T> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            assert!(r < n && c < n, "triplet ({r}, {c}) out of range for n = {n}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(col, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.cols[a..b].binary_search(&c) {
            Ok(k) => self.vals[a + k],
            Err(_) => T::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        for r in 0..self.n {
            let mut s = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[r] = s;
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                d[r][c] = v;
            }
        }
        d
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn asymmetry(&self) -> T {
        let mut scale = T::zero();
        let mut diff = T::zero();
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                scale = scale.max(v.abs());
                diff = diff.max((v - self.get(c, r)).abs());
            }
        }
        if scale > T::zero() {
            diff / scale
        } else {
            T::zero()
        }
    }

    /// MatrixMarket coordinate text (1-based, general).
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.n, self.n, self.nnz());
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                let _ = writeln!(s, "{} {} {:.17e}", r + 1, c + 1, v.to_f64_lossy());
            }
        }
        s
    }
}
