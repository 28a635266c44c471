//! Tridiagonal storage, products and the Thomas solve.

use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    /// `coef` times the second-difference operator with reflecting ghost nodes
    /// (`u[-1] = u[1]`, `u[n] = u[n-2]`), i.e. homogeneous Neumann data.
    pub fn neumann_laplacian(n: usize, dx: f64, coef: f64) -> Self {
        assert!(n >= 3, "Neumann stencil needs at least 3 nodes");
        let s = coef / (dx * dx);
        let mut t = Self::zeros(n);
        for i in 0..n {
            t.diag[i] = -2.0 * s;
            if i > 0 {
                t.lower[i] = s;
            }
            if i + 1 < n {
                t.upper[i] = s;
            }
        }
        t.upper[0] = 2.0 * s;
        t.lower[n - 1] = 2.0 * s;
        t
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `self * x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            y[i] = v;
        }
    }

    /// `beta * self + diag(shift)`.
    pub fn scaled_plus_diag(&self, beta: f64, shift: &[f64]) -> Self {
        let n = self.len();
        let mut t = Self::zeros(n);
        for i in 0..n {
            t.lower[i] = beta * self.lower[i];
            t.upper[i] = beta * self.upper[i];
            t.diag[i] = beta * self.diag[i] + shift[i];
        }
        t
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; rhs.len()];
        let mut scratch = vec![0.0; rhs.len()];
        self.solve_into(rhs, &mut out, &mut scratch)?;
        Ok(out)
    }

    /// Thomas algorithm without pivoting. Fine for the M-matrices and
    /// weighted-definite systems assembled in this crate.
    pub fn solve_into(&self, rhs: &[f64], out: &mut [f64], scratch: &mut [f64]) -> Result<()> {
        let n = self.len();
        if rhs.len() != n || out.len() != n || scratch.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let pivot_floor = f64::MIN_POSITIVE;
        let mut den = self.diag[0];
        if den.abs() <= pivot_floor {
            return Err(Error::NoConvergence {
                what: "tridiagonal solve (zero pivot)",
                iterations: 0,
                residual: f64::INFINITY,
            });
        }
        scratch[0] = self.upper[0] / den;
        out[0] = rhs[0] / den;
        for i in 1..n {
            den = self.diag[i] - self.lower[i] * scratch[i - 1];
            if den.abs() <= pivot_floor {
                return Err(Error::NoConvergence {
                    what: "tridiagonal solve (zero pivot)",
                    iterations: i,
                    residual: f64::INFINITY,
                });
            }
            scratch[i] = if i + 1 < n { self.upper[i] / den } else { 0.0 };
            out[i] = (rhs[i] - self.lower[i] * out[i - 1]) / den;
        }
        for i in (0..n - 1).rev() {
            out[i] -= scratch[i] * out[i + 1];
        }
        Ok(())
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub(crate) fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}
