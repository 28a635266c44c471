//! Time stepping for the coupled disperser / sedentary system.
//!
//! One step of size `dt`:
//! 1. `P^n`, `B^n` are taken from the current state;
//! 2. `u` solves `(I + dt (m + e + c u^n) - dt d Lap) u^{n+1} = u^n + dt B^n`;
//! 3. each age cohort moves one node, `w_{j+1} = w_j exp(-dt mu(a_j + dt/2, P^n))`,
//!    and the oldest node leaves the grid;
//! 4. the newborn node is `w_0 = chi(P^n) e u^{n+1}`;
//! 5. `P^{n+1}`, `B^{n+1}` are refreshed.

mod oracle;
mod state;

pub use oracle::{characteristic_oracle, p_balance_residual, History};
pub use state::{recruitment_field, total_population, AgeField, PopulationState};

use crate::error::{Error, Result};
use crate::grid::Discretization;
use crate::linalg::Tridiagonal;
use crate::rates::{ModelParams, SpatialField};

/// Values above this abort the run.
pub const BLOW_UP: f64 = 1e12;
/// Negatives down to this are treated as round-off and reset to zero.
pub const NEGATIVE_FLOOR: f64 = -1e-12;

/// Recorded output of [`Solver::simulate`]. Dense series have one entry per
/// step, including the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub population: Vec<f64>,
    pub u_max: Vec<f64>,
    pub u_min: Vec<f64>,
    /// `sup_x int w da`.
    pub w_norm: Vec<f64>,
    /// `int chi(P) e u dx`.
    pub inflow: Vec<f64>,
    /// Mass lost to mortality per unit time, in the scheme's survival form.
    pub death: Vec<f64>,
    /// `int w(x, A) dx`, the flux through the age horizon.
    pub outflow: Vec<f64>,
    pub snapshots: Vec<PopulationState>,
    pub u_history: Option<Vec<SpatialField>>,
    pub final_state: PopulationState,
}

impl Trajectory {
    pub fn u_norm_series(&self) -> &[f64] {
        &self.u_max
    }

    /// Index of the first sample in the last quarter of the run.
    pub fn tail_start(&self) -> usize {
        let t0 = self.times[0];
        let t1 = *self.times.last().unwrap();
        let cut = t0 + 0.75 * (t1 - t0);
        self.times.partition_point(|t| *t < cut - 1e-12)
    }
}

/// Precomputed tables for stepping one parameter set on one grid.
pub struct Solver<'a> {
    params: &'a ModelParams,
    grid: &'a Discretization,
    /// `dt * d * Lap`
    diffusion: Tridiagonal,
    loss: Vec<f64>,
    space_w: Vec<f64>,
    age_w: Vec<f64>,
    /// `beta` without its density factor, on age nodes.
    beta_base: Vec<f64>,
    /// `mu` without its density factor, at cell midpoints.
    mu_base: Vec<f64>,
    /// One-step survival when `mu` ignores `P`.
    frozen_survival: Option<Vec<f64>>,
}

impl<'a> Solver<'a> {
    pub fn new(params: &'a ModelParams, grid: &'a Discretization) -> Result<Self> {
        if params.n_x() != grid.n_x {
            return Err(Error::LengthMismatch {
                expected: grid.n_x,
                got: params.n_x(),
            });
        }
        let (nx, na) = (grid.n_x, grid.n_a);
        let mut beta_base = vec![0.0; nx * (na + 1)];
        let mut mu_base = vec![0.0; nx * na];
        for x in 0..nx {
            for j in 0..=na {
                beta_base[x * (na + 1) + j] = params.beta.spatial[x] * params.beta.age.eval(grid.age(j));
            }
            for j in 0..na {
                mu_base[x * na + j] = params.mu.spatial[x] * params.mu.age.eval(grid.mid_age(j));
            }
        }
        let frozen_survival = params
            .mu
            .density
            .is_constant()
            .then(|| mu_base.iter().map(|m| (-grid.dt * m).exp()).collect());
        Ok(Self {
            params,
            grid,
            diffusion: grid.laplacian(grid.dt * params.diffusion),
            loss: params.loss_rate(),
            space_w: grid.space_weights(),
            age_w: grid.age_weights(),
            beta_base,
            mu_base,
            frozen_survival,
        })
    }

    pub fn params(&self) -> &ModelParams {
        self.params
    }

    pub fn grid(&self) -> &Discretization {
        self.grid
    }

    pub fn initial_state(&self, u: SpatialField, w: AgeField) -> Result<PopulationState> {
        PopulationState::new(self.params, self.grid, 0.0, u, w)
    }

    fn survival_factors(&self, p: f64) -> std::borrow::Cow<'_, [f64]> {
        match &self.frozen_survival {
            Some(s) => std::borrow::Cow::Borrowed(s),
            None => {
                let f = self.params.mu.density.factor(p);
                let dt = self.grid.dt;
                std::borrow::Cow::Owned(self.mu_base.iter().map(|m| (-dt * m * f).exp()).collect())
            }
        }
    }

    fn recruitment(&self, w: &AgeField, p: f64) -> SpatialField {
        let na1 = self.grid.n_ages();
        let f = self.params.beta.density.factor(p);
        let b = (0..self.grid.n_x)
            .map(|x| {
                let base = &self.beta_base[x * na1..(x + 1) * na1];
                f * w.row(x).iter().zip(base).zip(&self.age_w).map(|((w, b), a)| w * b * a).sum::<f64>()
            })
            .collect();
        SpatialField::from_vec(b)
    }

    fn population(&self, w: &AgeField) -> f64 {
        (0..self.grid.n_x)
            .map(|x| self.space_w[x] * crate::kernel::dot(&self.age_w, w.row(x)))
            .sum()
    }

    /// Flux terms of the population balance at `state`: inflow, death, outflow.
    pub fn fluxes(&self, state: &PopulationState) -> (f64, f64, f64) {
        let p = state.population;
        let na = self.grid.n_a;
        let surv = self.survival_factors(p);
        let mut inflow = 0.0;
        let mut death = 0.0;
        let mut outflow = 0.0;
        for x in 0..self.grid.n_x {
            let row = state.w.row(x);
            let chi = self.params.chi.eval(x, 0.0, p);
            inflow += self.space_w[x] * chi * self.params.settlement[x] * state.u[x];
            let e = &surv[x * na..(x + 1) * na];
            death += self.space_w[x] * row[..na].iter().zip(e).map(|(w, e)| w * (1.0 - e)).sum::<f64>();
            outflow += self.space_w[x] * row[na];
        }
        (inflow, death, outflow)
    }

    /// Advances `state` by one step.
    pub fn step(&self, state: &PopulationState) -> Result<PopulationState> {
        let grid = self.grid;
        let params = self.params;
        let (nx, na) = (grid.n_x, grid.n_a);
        let dt = grid.dt;
        let t = state.t + dt;
        let p = state.population;

        let shift: Vec<f64> = (0..nx)
            .map(|i| 1.0 + dt * (self.loss[i] + params.competition[i] * state.u[i]))
            .collect();
        let system = self.diffusion.scaled_plus_diag(-1.0, &shift);
        let rhs: Vec<f64> = (0..nx).map(|i| state.u[i] + dt * state.recruitment[i]).collect();
        let mut u = system.solve(&rhs)?;

        let surv = self.survival_factors(p);
        let mut w = AgeField::for_grid(grid);
        let mut discarded = 0.0;
        for x in 0..nx {
            let old = state.w.row(x);
            discarded += self.space_w[x] * old[na];
            let e = &surv[x * na..(x + 1) * na];
            let new = w.row_mut(x);
            for j in 0..na {
                new[j + 1] = old[j] * e[j];
            }
        }
        discarded *= dt;

        let mut clamped = state.clamped;
        let mut most_negative = state.most_negative;
        for v in u.iter_mut() {
            guard(v, t, &mut clamped, &mut most_negative)?;
        }
        for x in 0..nx {
            let chi = params.chi.eval(x, 0.0, p);
            w.set(x, 0, chi * params.settlement[x] * u[x]);
        }
        for x in 0..nx {
            for v in w.row_mut(x) {
                guard(v, t, &mut clamped, &mut most_negative)?;
            }
        }

        let population = self.population(&w);
        let peak = state.peak_population.max(population);
        if grid.truncated {
            let allowed = grid.tail_tol * peak;
            if discarded > allowed {
                return Err(Error::TailMass { t, discarded, allowed });
            }
        }
        let recruitment = self.recruitment(&w, population);
        Ok(PopulationState {
            t,
            u: SpatialField::from_vec(u),
            w,
            population,
            recruitment,
            peak_population: peak,
            clamped,
            most_negative,
        })
    }

    /// Steps `n` times, handing every new state to `visit`.
    pub fn run(
        &self,
        initial: &PopulationState,
        n: usize,
        mut visit: impl FnMut(&PopulationState) -> Result<()>,
    ) -> Result<PopulationState> {
        let mut state = initial.clone();
        for _ in 0..n {
            state = self.step(&state)?;
            visit(&state)?;
        }
        Ok(state)
    }

    /// Number of steps to go from `t0` to `t_end`.
    pub fn steps_until(&self, t0: f64, t_end: f64) -> usize {
        ((t_end - t0) / self.grid.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn simulate(&self, initial: &PopulationState, t_end: f64, output_times: &[f64]) -> Result<Trajectory> {
        self.simulate_with(initial, t_end, output_times, false)
    }

    /// As [`Solver::simulate`], optionally keeping every `u` for the
    /// characteristic oracle.
    pub fn simulate_with(
        &self,
        initial: &PopulationState,
        t_end: f64,
        output_times: &[f64],
        record_u: bool,
    ) -> Result<Trajectory> {
        if !(t_end > initial.t) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {t_end} must exceed the initial time {}",
                initial.t
            )));
        }
        if output_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("output times must be strictly increasing".into()));
        }
        let n = self.steps_until(initial.t, t_end);
        let mut traj = Trajectory {
            times: Vec::with_capacity(n + 1),
            population: Vec::with_capacity(n + 1),
            u_max: Vec::with_capacity(n + 1),
            u_min: Vec::with_capacity(n + 1),
            w_norm: Vec::with_capacity(n + 1),
            inflow: Vec::with_capacity(n + 1),
            death: Vec::with_capacity(n + 1),
            outflow: Vec::with_capacity(n + 1),
            snapshots: Vec::new(),
            u_history: record_u.then(Vec::new),
            final_state: initial.clone(),
        };
        let half = 0.5 * self.grid.dt;
        let mut next_out = output_times.iter().position(|t| *t >= initial.t - half).unwrap_or(output_times.len());
        let mut record = |s: &PopulationState, traj: &mut Trajectory| {
            let (inflow, death, outflow) = self.fluxes(s);
            traj.times.push(s.t);
            traj.population.push(s.population);
            traj.u_max.push(s.u.max());
            traj.u_min.push(s.u.min());
            traj.w_norm.push(s.w_norm(self.grid));
            traj.inflow.push(inflow);
            traj.death.push(death);
            traj.outflow.push(outflow);
            if let Some(h) = traj.u_history.as_mut() {
                h.push(s.u.clone());
            }
            while next_out < output_times.len() && s.t >= output_times[next_out] - half {
                if traj.snapshots.last().map_or(true, |l: &PopulationState| l.t < s.t) {
                    traj.snapshots.push(s.clone());
                }
                next_out += 1;
            }
        };
        record(initial, &mut traj);
        let final_state = self.run(initial, n, |s| {
            record(s, &mut traj);
            Ok(())
        })?;
        traj.final_state = final_state;
        Ok(traj)
    }
}

#[inline]
fn guard(v: &mut f64, t: f64, clamped: &mut usize, most_negative: &mut f64) -> Result<()> {
    if !v.is_finite() || *v > BLOW_UP {
        return Err(Error::BlowUp { t, value: *v });
    }
    if *v < 0.0 {
        *most_negative = most_negative.min(*v);
        if *v < NEGATIVE_FLOOR {
            return Err(Error::Negative { t, value: *v });
        }
        *v = 0.0;
        *clamped += 1;
    }
    Ok(())
}

/// One step without reusing precomputed tables.
pub fn step(params: &ModelParams, grid: &Discretization, state: &PopulationState) -> Result<PopulationState> {
    Solver::new(params, grid)?.step(state)
}

pub fn simulate(
    params: &ModelParams,
    grid: &Discretization,
    initial: &PopulationState,
    t_end: f64,
    output_times: &[f64],
) -> Result<Trajectory> {
    Solver::new(params, grid)?.simulate(initial, t_end, output_times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::rates::{DensityResponse, FieldSpec, Horizon, LawSpec, ModelSpec};

    fn spec(beta0: f64) -> ModelSpec {
        ModelSpec::constant_benchmark(beta0, DensityResponse::Constant)
    }

    #[test]
    fn zero_state_is_fixed() {
        let p = spec(6.0).build(9).unwrap();
        let g = build_grid(&p, 9, 0.05, 1e-8).unwrap();
        let s = Solver::new(&p, &g).unwrap();
        let z = PopulationState::zero(&p, &g);
        let next = s.step(&z).unwrap();
        assert!(next.u.iter().all(|v| *v == 0.0));
        assert_eq!(next.w.max(), 0.0);
        assert!((next.t - 0.05).abs() < 1e-15);
    }

    #[test]
    fn scalar_implicit_euler_decay() {
        let mut sp = spec(0.0);
        sp.competition = FieldSpec::Constant(1e-300);
        let p = sp.build(5).unwrap();
        let dt = 0.01;
        let g = build_grid(&p, 5, dt, 1e-8).unwrap();
        let s = Solver::new(&p, &g).unwrap();
        let init = s.initial_state(SpatialField::constant(5, 1.0), AgeField::for_grid(&g)).unwrap();
        let next = s.step(&init).unwrap();
        for v in next.u.iter() {
            assert!((v - 1.0 / (1.0 + 2.0 * dt)).abs() < 1e-14);
            assert!((v - (-2.0 * dt).exp()).abs() < 2.0 * dt * dt);
        }
    }

    #[test]
    fn constant_mortality_transport_is_exact() {
        let mut sp = spec(0.0);
        sp.a_max = Horizon::Finite(2.0);
        let p = sp.build(5).unwrap();
        let g = build_grid(&p, 5, 0.1, 1e-8).unwrap();
        let s = Solver::new(&p, &g).unwrap();
        let init = s
            .initial_state(SpatialField::zeros(5), AgeField::from_fn(&g, |_, _| 1.0))
            .unwrap();
        let n = 7;
        let end = s.run(&init, n, |_| Ok(())).unwrap();
        let expected = (-(n as f64) * g.dt).exp();
        for x in 0..5 {
            for j in n..g.n_ages() {
                assert!((end.w.get(x, j) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn truncation_loss_is_reported() {
        let p = spec(0.0).build(5).unwrap();
        let g = build_grid(&p, 5, 0.1, 1e-8).unwrap();
        let s = Solver::new(&p, &g).unwrap();
        let init = s
            .initial_state(SpatialField::zeros(5), AgeField::from_fn(&g, |_, _| 1.0))
            .unwrap();
        assert!(matches!(s.step(&init), Err(Error::TailMass { .. })));
    }

    #[test]
    fn runaway_growth_is_caught() {
        let mut sp = spec(1e13);
        sp.competition = FieldSpec::Constant(1e-300);
        sp.a_max = Horizon::Finite(1.0);
        let p = sp.build(5).unwrap();
        let g = build_grid(&p, 5, 0.1, 1e-8).unwrap();
        let s = Solver::new(&p, &g).unwrap();
        let init = s
            .initial_state(SpatialField::constant(5, 1.0), AgeField::from_fn(&g, |_, _| 1.0))
            .unwrap();
        let r = s.run(&init, 50, |_| Ok(()));
        assert!(matches!(r, Err(Error::BlowUp { .. })));
    }

    #[test]
    fn snapshots_follow_output_times() {
        let p = spec(2.0).build(5).unwrap();
        let g = build_grid(&p, 5, 0.1, 1e-8).unwrap();
        let s = Solver::new(&p, &g).unwrap();
        let init = s
            .initial_state(SpatialField::constant(5, 1.0), AgeField::from_fn(&g, |_, a| (-a).exp()))
            .unwrap();
        let tr = s.simulate(&init, 1.0, &[0.0, 0.5, 1.0]).unwrap();
        let ts: Vec<f64> = tr.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(ts.len(), 3);
        assert!((ts[1] - 0.5).abs() < 1e-12 && (ts[2] - 1.0).abs() < 1e-12);
        assert_eq!(tr.times.len(), 11);
    }

    #[test]
    fn cached_population_matches_quadrature() {
        let mut sp = spec(3.0);
        sp.mu = LawSpec::constant(1.0).with_density(DensityResponse::LinearThreshold { slope: 0.2, cap: 3.0 });
        let p = sp.build(9).unwrap();
        let g = build_grid(&p, 9, 0.05, 1e-8).unwrap();
        let s = Solver::new(&p, &g).unwrap();
        let init = s
            .initial_state(SpatialField::constant(9, 0.5), AgeField::from_fn(&g, |_, a| (-a).exp()))
            .unwrap();
        let end = s.run(&init, 20, |_| Ok(())).unwrap();
        assert!((end.population - total_population(&g, &end.w)).abs() < 1e-13);
        let b = recruitment_field(&p, &g, &end.w, end.population);
        for (a, c) in b.iter().zip(end.recruitment.iter()) {
            assert!((a - c).abs() < 1e-13);
        }
    }
}
