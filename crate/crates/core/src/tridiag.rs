//! Thomas algorithm for tridiagonal systems, split into a one-off
//! factorization and repeated cheap solves.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// LU factors of a tridiagonal matrix without pivoting.
///
/// Stable for diagonally dominant matrices, which is what the implicit
/// diffusion step produces.
#[derive(Debug, Clone)]
pub struct TridiagonalLu<T> {
    // multipliers l_i = a_i / u_{i-1}, i >= 1 (index 0 unused)
    multipliers: Vec<T>,
    inv_pivots: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> TridiagonalLu<T> {
    /// `lower[i]` is `A[i+1][i]`, `diag[i]` is `A[i][i]`, `upper[i]` is `A[i][i+1]`.
    pub fn factor(lower: &[T], diag: &[T], upper: &[T]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(Error::domain(format!(
                "tridiagonal bands have inconsistent lengths ({}, {}, {})",
                lower.len(),
                n,
                upper.len()
            )));
        }
        let mut multipliers = vec![T::zero(); n];
        let mut inv_pivots = vec![T::zero(); n];
        let mut pivot = diag[0];
        for i in 0..n {
            if i > 0 {
                let l = lower[i - 1] / pivot;
                multipliers[i] = l;
                pivot = diag[i] - l * upper[i - 1];
            }
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(Error::domain(format!("zero pivot in tridiagonal row {i}")));
            }
            inv_pivots[i] = pivot.recip();
        }
        Ok(Self {
            multipliers,
            inv_pivots,
            upper: upper.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivots.is_empty()
    }

    /// Solves in place: `x` holds the right-hand side on entry.
    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = self.len();
        assert_eq!(x.len(), n, "right-hand side length");
        for i in 1..n {
            x[i] = x[i] - self.multipliers[i] * x[i - 1];
        }
        x[n - 1] = x[n - 1] * self.inv_pivots[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.upper[i] * x[i + 1]) * self.inv_pivots[i];
        }
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
