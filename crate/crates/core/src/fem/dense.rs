//! Dense Cholesky factorization for small systems.

use crate::error::SolveError;
use crate::scalar::Real;

/// Lower-triangular Cholesky factor of a row-major SPD matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn factor(a: &[Vec<T>]) -> Result<Self, SolveError> {
        let n = a.len();
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = a[j][j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > T::zero()) {
                return Err(SolveError::NotPositiveDefinite(d.to_f64_lossy()));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i][j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}
