//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-14;

/// Tridiagonal matrix in band storage. `lower[i]` couples row `i + 1` to
/// column `i`; `upper[i]` couples row `i` to column `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::LengthMismatch {
                expected: 1,
                actual: 0,
            });
        }
        for len in [lower.len(), upper.len()] {
            if len + 1 != n {
                return Err(Error::LengthMismatch {
                    expected: n - 1,
                    actual: len,
                });
            }
        }
        Ok(Self { lower, diag, upper })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![1.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    fn row_scale(&self, i: usize) -> f64 {
        let mut s = self.diag[i].abs();
        if i > 0 {
            s = s.max(self.lower[i - 1].abs());
        }
        if i + 1 < self.len() {
            s = s.max(self.upper[i].abs());
        }
        s
    }

    /// Solve `A x = rhs`. Fails when an elimination pivot drops below
    /// `1e-14` times the scale of its row.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: rhs.len(),
            });
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot.is_nan() || pivot.abs() <= PIVOT_TOL * self.row_scale(0) {
            return Err(Error::SingularSystem { row: 0, pivot });
        }
        if n > 1 {
            c[0] = self.upper[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            let l = self.lower[i - 1];
            pivot = self.diag[i] - l * c[i - 1];
            if pivot.is_nan() || pivot.abs() <= PIVOT_TOL * self.row_scale(i) {
                return Err(Error::SingularSystem { row: i, pivot });
            }
            if i + 1 < n {
                c[i] = self.upper[i] / pivot;
            }
            d[i] = (rhs[i] - l * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Solve a tridiagonal system given its three bands.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    Tridiagonal::new(lower.to_vec(), diag.to_vec(), upper.to_vec())?.solve(rhs)
}
