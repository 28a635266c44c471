//! Discrete survival and age-integrated kernels shared by the solver, the
//! spectral routines and the equilibrium solver.
//!
//! Survival to age node `j` is `S_0 = 1`, `S_{j+1} = S_j * exp(-dt * mu(a_j + dt/2))`,
//! which is exactly the factor the time stepper applies along a
//! characteristic. Age integrals use trapezoid weights on the nodes.

use crate::grid::Discretization;
use crate::rates::ModelParams;

/// Survival `S_j` on all `n_a + 1` age nodes.
pub(crate) fn survival(params: &ModelParams, grid: &Discretization, x: usize, p: f64) -> Vec<f64> {
    let mut s = vec![1.0; grid.n_ages()];
    for j in 0..grid.n_a {
        s[j + 1] = s[j] * (-grid.dt * params.mu.eval(x, grid.mid_age(j), p)).exp();
    }
    s
}

/// `sum_j weight_j * f_j`.
pub(crate) fn dot(weights: &[f64], f: &[f64]) -> f64 {
    weights.iter().zip(f).map(|(w, v)| w * v).sum()
}

/// `int beta(x, a, p) S(a) exp(-k a) da` at node `x`, without the `chi e` prefactor.
pub(crate) fn reproduction_integral(params: &ModelParams, grid: &Discretization, x: usize, p: f64, k: f64) -> f64 {
    let s = survival(params, grid, x, p);
    let w = grid.age_weights();
    (0..grid.n_ages())
        .map(|j| {
            let a = grid.age(j);
            w[j] * params.beta.eval(x, a, p) * s[j] * (-k * a).exp()
        })
        .sum()
}

/// `int S(a) da` at node `x`.
pub(crate) fn survival_integral(params: &ModelParams, grid: &Discretization, x: usize, p: f64) -> f64 {
    dot(&grid.age_weights(), &survival(params, grid, x, p))
}

/// `K(x) = chi(x, p) e(x) int beta(x, a, p) S(a) exp(-k a) da` on every node.
pub(crate) fn k_field(params: &ModelParams, grid: &Discretization, k: f64, p: f64) -> Vec<f64> {
    (0..grid.n_x)
        .map(|x| params.chi.eval(x, 0.0, p) * params.settlement[x] * reproduction_integral(params, grid, x, p, k))
        .collect()
}
