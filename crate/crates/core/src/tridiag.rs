//! Thomas algorithm for complex tridiagonal systems with a constant
//! off-diagonal.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pre-factored form of a symmetric tridiagonal matrix with per-row diagonal
/// `diag` and a single off-diagonal value `off`. The forward-sweep
/// coefficients depend only on the matrix, so they are computed once and
/// each solve costs two passes over the right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalFactors {
    /// Modified super-diagonal `c'_j`.
    upper: Vec<Complex64>,
    /// `1 / (diag_j - off · c'_{j-1})`.
    inv_pivot: Vec<Complex64>,
}

impl TridiagonalFactors {
    /// Factor the matrix. No pivoting is done, so strict diagonal dominance
    /// `|diag_j| > |off_left| + |off_right|` is required on every row.
    pub fn new(diag: &[Complex64], off: Complex64) -> Result<Self> {
        let n = diag.len();
        for (row, d) in diag.iter().enumerate() {
            let neighbours = usize::from(row > 0) + usize::from(row + 1 < n);
            if d.norm() <= neighbours as f64 * off.norm() {
                return Err(Error::NotDiagonallyDominant { row });
            }
        }

        let mut upper = Vec::with_capacity(n);
        let mut inv_pivot = Vec::with_capacity(n);
        let mut prev_upper = Complex64::new(0.0, 0.0);
        for d in diag {
            let inv = 1.0 / (d - off * prev_upper);
            prev_upper = off * inv;
            upper.push(prev_upper);
            inv_pivot.push(inv);
        }
        Ok(TridiagonalFactors { upper, inv_pivot })
    }

    pub fn len(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    pub(crate) fn upper(&self) -> &[Complex64] {
        &self.upper
    }

    pub(crate) fn inv_pivot(&self) -> &[Complex64] {
        &self.inv_pivot
    }

    /// Overwrite `rhs` with the solution of `A x = rhs`.
    pub fn solve_in_place(&self, rhs: &mut [Complex64]) {
        assert_eq!(rhs.len(), self.len(), "rhs length does not match matrix");
        let n = rhs.len();
        if n == 0 {
            return;
        }
        // g_j = (r_j - off·g_{j-1}) / pivot_j = r_j/pivot_j - c'_j·g_{j-1}
        let mut prev = Complex64::new(0.0, 0.0);
        for ((r, inv), c) in rhs.iter_mut().zip(&self.inv_pivot).zip(&self.upper) {
            *r = *r * inv - c * prev;
            prev = *r;
        }
        for j in (0..n - 1).rev() {
            let next = rhs[j + 1];
            rhs[j] -= self.upper[j] * next;
        }
    }
}
