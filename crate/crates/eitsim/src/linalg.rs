//! Dense complex linear solve via Gaussian elimination with partial pivoting.
//!
//! The steady-state systems are small (N rarely above a few hundred), so a
//! direct dense solve is both the simplest and the fastest option here.

use num_complex::Complex64;
use thiserror::Error;

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (row, col): (usize, usize)) -> &Complex64 {
        &self.data[row * self.n + col]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (row, col): (usize, usize)) -> &mut Complex64 {
        &mut self.data[row * self.n + col]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("matrix is numerically singular")]
pub struct SingularMatrix;

/// Solves `a * x = b`, overwriting both arguments; `b` holds the solution on
/// success. The pivot in each column is the remaining entry of largest
/// magnitude; an exactly (or denormally) vanishing pivot reports failure.
pub fn solve_in_place(a: &mut ComplexMatrix, b: &mut [Complex64]) -> Result<(), SingularMatrix> {
    let n = a.n;
    assert_eq!(b.len(), n, "right-hand side length must match the matrix size");

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = a[(col, col)].norm_sqr();
        for row in col + 1..n {
            let mag = a[(row, col)].norm_sqr();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag < 1e-300 {
            return Err(SingularMatrix);
        }
        if pivot_row != col {
            for k in col..n {
                let tmp = a[(col, k)];
                a[(col, k)] = a[(pivot_row, k)];
                a[(pivot_row, k)] = tmp;
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[(col, col)];
        for row in col + 1..n {
            let factor = a[(row, col)] / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            a[(row, col)] = Complex64::new(0.0, 0.0);
            for k in col + 1..n {
                let sub = factor * a[(col, k)];
                a[(row, k)] -= sub;
            }
            let sub = factor * b[col];
            b[row] -= sub;
        }
    }

    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[(row, k)] * b[k];
        }
        b[row] = acc / a[(row, row)];
    }
    Ok(())
}
