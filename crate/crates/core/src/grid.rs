//! Space and age discretization.
//!
//! Space is `n_x` uniform nodes on `[0, L]` with reflecting ghost nodes for
//! the Neumann condition. Age nodes sit at `a_j = j * dt`, `j = 0..=n_a`,
//! with the age step equal to the time step so one time step moves every
//! cohort exactly one node along its characteristic.
//!
//! Quadrature is trapezoid in both `x` and `a` on these nodes.

use crate::error::{invalid, Error, Result};
use crate::linalg::Tridiagonal;
use crate::rates::{Horizon, ModelParams, SpatialField};

pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub length: f64,
    pub n_x: usize,
    pub dx: f64,
    /// Age horizon `A`, equal to `a_max` when finite.
    pub horizon: f64,
    /// Number of age cells; there are `n_a + 1` age nodes.
    pub n_a: usize,
    /// Time step, identical to the age step.
    pub dt: f64,
    /// True when `A` truncates an infinite `a_max`.
    pub truncated: bool,
    pub tail_tol: f64,
}

/// Builds the grid. For a finite `a_max`, `dt` is shrunk so that `a_max` is
/// a whole number of steps; for an infinite one, `A` is the smallest
/// multiple of `dt` with `exp(-mu_lower * A) < tail_tol`.
pub fn build_grid(params: &ModelParams, n_x: usize, dt: f64, tail_tol: f64) -> Result<Discretization> {
    if n_x < 3 {
        return Err(invalid(format!("n_x = {n_x}, need at least 3 nodes")));
    }
    if params.n_x() != n_x {
        return Err(Error::LengthMismatch {
            expected: n_x,
            got: params.n_x(),
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("dt = {dt} must be > 0")));
    }
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(invalid(format!("tail_tol = {tail_tol} must lie in (0, 1)")));
    }
    let (horizon, n_a, dt, truncated) = match params.horizon {
        Horizon::Finite(a_max) => {
            if dt > a_max {
                return Err(invalid(format!("dt = {dt} exceeds a_max = {a_max}")));
            }
            let n_a = ((a_max / dt) * (1.0 - 1e-12)).ceil() as usize;
            (a_max, n_a, a_max / n_a as f64, false)
        }
        Horizon::Infinite => {
            let needed = (1.0 / tail_tol).ln() / params.mu_lower;
            let n_a = (needed / dt).floor() as usize + 1;
            (n_a as f64 * dt, n_a, dt, true)
        }
    };
    Ok(Discretization {
        length: params.length,
        n_x,
        dx: params.length / (n_x as f64 - 1.0),
        horizon,
        n_a,
        dt,
        truncated,
        tail_tol,
    })
}

impl Discretization {
    pub fn n_ages(&self) -> usize {
        self.n_a + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn age(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    /// Age at the midpoint of cell `j`, `(j + 1/2) dt`.
    pub fn mid_age(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dt
    }

    pub fn space_weights(&self) -> Vec<f64> {
        trapezoid(self.n_x, self.dx)
    }

    pub fn age_weights(&self) -> Vec<f64> {
        trapezoid(self.n_ages(), self.dt)
    }

    /// `coef * Laplacian` as a tridiagonal matrix.
    pub fn laplacian(&self, coef: f64) -> Tridiagonal {
        Tridiagonal::neumann_laplacian(self.n_x, self.dx, coef)
    }

    pub fn laplacian_apply(&self, u: &[f64]) -> Result<SpatialField> {
        if u.len() != self.n_x {
            return Err(Error::LengthMismatch {
                expected: self.n_x,
                got: u.len(),
            });
        }
        Ok(SpatialField::from_vec(self.laplacian(1.0).apply(u)))
    }

    /// Trapezoid integral over `[0, L]`.
    pub fn integrate_space(&self, f: &[f64]) -> f64 {
        let n = f.len();
        let inner: f64 = f[1..n - 1].iter().sum();
        self.dx * (inner + 0.5 * (f[0] + f[n - 1]))
    }
}

fn trapezoid(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}
