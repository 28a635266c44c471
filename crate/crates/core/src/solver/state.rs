use crate::error::{Error, Result};
use crate::grid::Discretization;
use crate::rates::{ModelParams, SpatialField};

/// Sedentary density on the `n_x` by `n_a + 1` node lattice, stored row per
/// spatial node.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeField {
    n_x: usize,
    n_ages: usize,
    data: Vec<f64>,
}

impl AgeField {
    pub fn zeros(n_x: usize, n_ages: usize) -> Self {
        Self {
            n_x,
            n_ages,
            data: vec![0.0; n_x * n_ages],
        }
    }

    pub fn for_grid(grid: &Discretization) -> Self {
        Self::zeros(grid.n_x, grid.n_ages())
    }

    /// Samples `f(x_index, age)` on the grid nodes.
    pub fn from_fn(grid: &Discretization, f: impl Fn(usize, f64) -> f64) -> Self {
        let mut w = Self::for_grid(grid);
        for x in 0..grid.n_x {
            for j in 0..grid.n_ages() {
                w.data[x * w.n_ages + j] = f(x, grid.age(j));
            }
        }
        w
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_x = rows.len();
        let n_ages = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_ages) {
            return Err(Error::LengthMismatch {
                expected: n_ages,
                got: bad.len(),
            });
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("age field contains {v}")));
        }
        Ok(Self { n_x, n_ages, data })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_ages(&self) -> usize {
        self.n_ages
    }

    #[inline]
    pub fn get(&self, x: usize, j: usize) -> f64 {
        self.data[x * self.n_ages + j]
    }

    #[inline]
    pub fn set(&mut self, x: usize, j: usize, v: f64) {
        self.data[x * self.n_ages + j] = v;
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.n_ages..(x + 1) * self.n_ages]
    }

    pub fn row_mut(&mut self, x: usize) -> &mut [f64] {
        &mut self.data[x * self.n_ages..(x + 1) * self.n_ages]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n_x: self.n_x,
            n_ages: self.n_ages,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        crate::linalg::max_of(&self.data)
    }

    pub fn min(&self) -> f64 {
        crate::linalg::min_of(&self.data)
    }

    /// Linear interpolation in age along row `x`, for `a` in `[0, A]`.
    pub fn interpolate(&self, grid: &Discretization, x: usize, a: f64) -> f64 {
        let s = (a / grid.dt).clamp(0.0, grid.n_a as f64);
        let j = (s.floor() as usize).min(grid.n_a.saturating_sub(1));
        let t = s - j as f64;
        let row = self.row(x);
        row[j] * (1.0 - t) + row[(j + 1).min(self.n_ages - 1)] * t
    }
}

/// `int int w dx da`, trapezoid in both variables.
pub fn total_population(grid: &Discretization, w: &AgeField) -> f64 {
    let wa = grid.age_weights();
    let per_node: Vec<f64> = (0..grid.n_x).map(|x| crate::kernel::dot(&wa, w.row(x))).collect();
    grid.integrate_space(&per_node)
}

/// `B(x) = int beta(x, a, p) w(x, a) da` on every node.
pub fn recruitment_field(params: &ModelParams, grid: &Discretization, w: &AgeField, p: f64) -> SpatialField {
    let wa = grid.age_weights();
    let b = (0..grid.n_x)
        .map(|x| {
            w.row(x)
                .iter()
                .enumerate()
                .map(|(j, v)| wa[j] * params.beta.eval(x, grid.age(j), p) * v)
                .sum()
        })
        .collect();
    SpatialField::from_vec(b)
}

/// Disperser and sedentary densities at one time, with cached `P` and `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    pub t: f64,
    pub u: SpatialField,
    pub w: AgeField,
    pub population: f64,
    pub recruitment: SpatialField,
    /// Largest `P` seen along the run; scales the age-truncation check.
    pub peak_population: f64,
    /// Round-off negatives reset to zero so far.
    pub clamped: usize,
    /// Most negative raw value produced so far (0 when none).
    pub most_negative: f64,
}

impl PopulationState {
    pub fn new(params: &ModelParams, grid: &Discretization, t: f64, u: SpatialField, w: AgeField) -> Result<Self> {
        if u.len() != grid.n_x {
            return Err(Error::LengthMismatch {
                expected: grid.n_x,
                got: u.len(),
            });
        }
        if w.n_x() != grid.n_x || w.n_ages() != grid.n_ages() {
            return Err(Error::LengthMismatch {
                expected: grid.n_x * grid.n_ages(),
                got: w.n_x() * w.n_ages(),
            });
        }
        if u.iter().chain(w.as_slice()).any(|v| *v < 0.0) {
            return Err(Error::InvalidParameter("initial densities must be nonnegative".into()));
        }
        let population = total_population(grid, &w);
        let recruitment = recruitment_field(params, grid, &w, population);
        Ok(Self {
            t,
            u,
            w,
            population,
            recruitment,
            peak_population: population,
            clamped: 0,
            most_negative: 0.0,
        })
    }

    pub fn zero(params: &ModelParams, grid: &Discretization) -> Self {
        Self::new(params, grid, 0.0, SpatialField::zeros(grid.n_x), AgeField::for_grid(grid))
            .expect("zero state is valid")
    }

    /// `sup_x int w da`.
    pub fn w_norm(&self, grid: &Discretization) -> f64 {
        let wa = grid.age_weights();
        (0..grid.n_x)
            .map(|x| crate::kernel::dot(&wa, self.w.row(x)))
            .fold(0.0, f64::max)
    }

    /// Relative sup-norm distance over both components, scaled by `other`.
    pub fn relative_gap(&self, other: &PopulationState) -> f64 {
        let du = self.u.iter().zip(other.u.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dw = self
            .w
            .as_slice()
            .iter()
            .zip(other.w.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let su = other.u.max().abs().max(f64::MIN_POSITIVE);
        let sw = other.w.max().abs().max(f64::MIN_POSITIVE);
        (du / su).max(dw / sw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::rates::{AgeProfile, DensityResponse, Horizon, ModelSpec};

    fn setup(a_max: Horizon, dt: f64) -> (ModelParams, Discretization) {
        let mut spec = ModelSpec::constant_benchmark(1.0, DensityResponse::Constant);
        spec.a_max = a_max;
        let p = spec.build(9).unwrap();
        let g = build_grid(&p, 9, dt, 1e-8).unwrap();
        (p, g)
    }

    #[test]
    fn zero_field_has_zero_population() {
        let (_, g) = setup(Horizon::Finite(1.0), 0.1);
        assert_eq!(total_population(&g, &AgeField::for_grid(&g)), 0.0);
    }

    #[test]
    fn unit_box_has_unit_population() {
        let (_, g) = setup(Horizon::Finite(1.0), 0.1);
        let w = AgeField::from_fn(&g, |_, _| 1.0);
        assert!((total_population(&g, &w) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_profile_population_converges() {
        let mut errs = Vec::new();
        for dt in [0.1, 0.05, 0.025] {
            let (_, g) = setup(Horizon::Infinite, dt);
            let w = AgeField::from_fn(&g, |_, a| (-a).exp());
            let exact = 1.0 - (-g.horizon).exp();
            errs.push((total_population(&g, &w) - exact).abs());
        }
        assert!(errs[0] < 1e-3);
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.1);
        assert!((errs[1] / errs[2] - 4.0).abs() < 0.1);
    }

    #[test]
    fn recruitment_of_zero_rate_is_zero() {
        let (mut p, g) = setup(Horizon::Finite(1.0), 0.1);
        p.beta = crate::rates::RateLaw::constant(9, 0.0);
        let w = AgeField::from_fn(&g, |_, _| 1.0);
        assert!(recruitment_field(&p, &g, &w, 1.0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unit_recruitment() {
        let (p, g) = setup(Horizon::Finite(1.0), 0.1);
        let w = AgeField::from_fn(&g, |_, _| 1.0);
        assert!(recruitment_field(&p, &g, &w, 1.0).iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn age_weighted_recruitment_is_first_moment() {
        let (mut p, g) = setup(Horizon::Infinite, 0.01);
        p.beta.age = AgeProfile::Table {
            ages: vec![0.0, 100.0],
            values: vec![0.0, 100.0],
        };
        let w = AgeField::from_fn(&g, |_, a| (-a).exp());
        let b = recruitment_field(&p, &g, &w, 0.0);
        assert!(b.iter().all(|v| (v - 1.0).abs() < 1e-4));
    }

    #[test]
    fn interpolation_is_exact_on_linear_rows() {
        let (_, g) = setup(Horizon::Finite(1.0), 0.1);
        let w = AgeField::from_fn(&g, |x, a| x as f64 + 2.0 * a);
        assert!((w.interpolate(&g, 3, 0.37) - 3.74).abs() < 1e-12);
        assert!((w.interpolate(&g, 3, 1.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn negative_initial_data_is_rejected() {
        let (p, g) = setup(Horizon::Finite(1.0), 0.1);
        let w = AgeField::from_fn(&g, |_, a| a - 0.5);
        assert!(PopulationState::new(&p, &g, 0.0, SpatialField::zeros(9), w).is_err());
    }
}
