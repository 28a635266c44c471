//! Closed-form solution along characteristics, and the population balance.

use super::{AgeField, Trajectory};
use crate::error::{Error, Result};
use crate::grid::Discretization;
use crate::rates::{ModelParams, SpatialField};

/// Recorded disperser fields and total populations on increasing times
/// starting at 0.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub times: &'a [f64],
    pub u: &'a [SpatialField],
    pub population: &'a [f64],
}

impl<'a> History<'a> {
    /// Borrows the dense series of a run made with `u` recording on.
    pub fn of(traj: &'a Trajectory) -> Option<Self> {
        Some(Self {
            times: &traj.times,
            u: traj.u_history.as_deref()?,
            population: &traj.population,
        })
    }

    fn bracket(&self, s: f64) -> (usize, f64) {
        let n = self.times.len();
        if n == 1 {
            return (0, 0.0);
        }
        let hi = self.times.partition_point(|t| *t <= s).clamp(1, n - 1);
        let lo = hi - 1;
        let span = self.times[hi] - self.times[lo];
        (lo, ((s - self.times[lo]) / span).clamp(0.0, 1.0))
    }

    fn population_at(&self, s: f64) -> f64 {
        let (i, f) = self.bracket(s);
        match self.population.get(i + 1) {
            Some(next) => self.population[i] * (1.0 - f) + next * f,
            None => self.population[i],
        }
    }

    fn u_at(&self, x: usize, s: f64) -> f64 {
        let (i, f) = self.bracket(s);
        match self.u.get(i + 1) {
            Some(next) => self.u[i][x] * (1.0 - f) + next[x] * f,
            None => self.u[i][x],
        }
    }
}

/// `w(x, a, t)` from the characteristic formula: the initial profile
/// transported and decayed when `a > t`, the renewal value at birth time
/// `t - a` decayed when `a < t`. The mortality integral uses the midpoint
/// rule with steps no longer than `dt`.
pub fn characteristic_oracle(
    params: &ModelParams,
    grid: &Discretization,
    w0: &AgeField,
    history: &History<'_>,
    x: usize,
    a: f64,
    t: f64,
) -> Result<f64> {
    if x >= grid.n_x {
        return Err(Error::LengthMismatch {
            expected: grid.n_x,
            got: x,
        });
    }
    if !(0.0..=grid.horizon * (1.0 + 1e-12)).contains(&a) {
        return Err(Error::AgeOutOfRange { age: a, horizon: grid.horizon });
    }
    let (first, last) = match (history.times.first(), history.times.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::InvalidParameter("empty history".into())),
    };
    if history.u.len() != history.times.len() || history.population.len() != history.times.len() {
        return Err(Error::LengthMismatch {
            expected: history.times.len(),
            got: history.u.len().min(history.population.len()),
        });
    }
    let slack = 1e-9 * grid.dt;
    if first > slack || t > last + slack || t < 0.0 {
        return Err(Error::InvalidParameter(format!("history [{first}, {last}] does not cover t = {t}")));
    }
    if t == 0.0 {
        return Ok(w0.interpolate(grid, x, a));
    }
    if (a - t).abs() <= slack.max(1e-12 * t) {
        return Err(Error::Seam(a));
    }
    let span = a.min(t);
    let n = ((span / grid.dt) - 1e-9).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let integral: f64 = (0..n)
        .map(|k| {
            let s = (k as f64 + 0.5) * h;
            params.mu.eval(x, a - s, history.population_at(t - s))
        })
        .sum::<f64>()
        * h;
    let start = if a > t {
        w0.interpolate(grid, x, a - t)
    } else {
        let birth = t - a;
        params.chi.eval(x, 0.0, history.population_at(birth)) * params.settlement[x] * history.u_at(x, birth)
    };
    Ok(start * (-integral).exp())
}

/// Largest mismatch between the centred difference of `P` and the
/// right-hand side of the population balance
/// `P' = int chi e u dx - (mortality flux) - (flux out at age A)`,
/// over interior samples of the dense series.
pub fn p_balance_residual(traj: &Trajectory) -> f64 {
    let n = traj.times.len();
    (1..n.saturating_sub(1))
        .map(|i| {
            let dp = (traj.population[i + 1] - traj.population[i - 1]) / (traj.times[i + 1] - traj.times[i - 1]);
            (dp - (traj.inflow[i] - traj.death[i] - traj.outflow[i])).abs()
        })
        .fold(0.0, f64::max)
}
