//! Model coefficients and density-dependent vital rates.
//!
//! Every vital rate is separable: `spatial(x) * age(a) * density(P)`, where
//! `P` is the total sedentary population. The spatial part lives on the grid
//! nodes, so a [`ModelParams`] is tied to one spatial resolution; a
//! [`ModelSpec`] holds the resolution-free description and builds params for
//! any node count.

mod audit;
mod spelling;

pub use audit::{audit_assumptions, audit_with, AssumptionCheck, AssumptionReport, ProbeLattice};

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Node values of a coefficient on the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField(Vec<f64>);

impl SpatialField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("spatial field contains {v}")));
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    /// Wraps values without the finiteness check; for internal hot paths.
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn max(&self) -> f64 {
        crate::linalg::max_of(&self.0)
    }

    pub fn min(&self) -> f64 {
        crate::linalg::min_of(&self.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for SpatialField {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Age dependence of a vital rate.
#[derive(Debug, Clone, PartialEq)]
pub enum AgeProfile {
    Constant(f64),
    /// `initial * exp(-decay * a)`
    Exponential { initial: f64, decay: f64 },
    /// Piecewise linear through `(ages[i], values[i])`, flat outside the table.
    Table { ages: Vec<f64>, values: Vec<f64> },
}

impl AgeProfile {
    pub fn eval(&self, a: f64) -> f64 {
        match self {
            AgeProfile::Constant(v) => *v,
            AgeProfile::Exponential { initial, decay } => initial * (-decay * a).exp(),
            AgeProfile::Table { ages, values } => {
                if a <= ages[0] {
                    return values[0];
                }
                let last = ages.len() - 1;
                if a >= ages[last] {
                    return values[last];
                }
                // first breakpoint strictly above a
                let hi = ages.partition_point(|&b| b <= a);
                let lo = hi - 1;
                let t = (a - ages[lo]) / (ages[hi] - ages[lo]);
                values[lo] + t * (values[hi] - values[lo])
            }
        }
    }

    pub fn supremum(&self) -> f64 {
        match self {
            AgeProfile::Constant(v) => *v,
            AgeProfile::Exponential { initial, .. } => *initial,
            AgeProfile::Table { values, .. } => crate::linalg::max_of(values),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            AgeProfile::Constant(_) => true,
            AgeProfile::Exponential { decay, .. } => *decay == 0.0,
            AgeProfile::Table { values, .. } => values.iter().all(|v| *v == values[0]),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            AgeProfile::Constant(v) if !(v.is_finite() && *v >= 0.0) => {
                Err(invalid(format!("age profile constant {v} must be finite and >= 0")))
            }
            AgeProfile::Exponential { initial, decay }
                if !(initial.is_finite() && *initial >= 0.0 && decay.is_finite() && *decay >= 0.0) =>
            {
                Err(invalid("exponential age profile needs initial >= 0 and decay >= 0"))
            }
            AgeProfile::Table { ages, values } => {
                if ages.is_empty() || ages.len() != values.len() {
                    return Err(invalid("age table needs matching, non-empty breakpoints and values"));
                }
                if ages.windows(2).any(|w| !(w[1] > w[0])) || ages.iter().any(|a| !a.is_finite()) {
                    return Err(invalid("age table breakpoints must be finite and strictly increasing"));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(invalid("age table values must be finite and >= 0"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Multiplicative dependence on the total sedentary population `P`.
/// Every variant equals 1 at `P = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityResponse {
    Constant,
    /// `1 / (1 + P / half)`
    Saturating { half: f64 },
    /// `exp(-rate * P)`
    Exponential { rate: f64 },
    /// `clamp(1 + slope * P, 0, cap)`
    LinearThreshold { slope: f64, cap: f64 },
}

impl DensityResponse {
    pub fn factor(&self, p: f64) -> f64 {
        match *self {
            DensityResponse::Constant => 1.0,
            DensityResponse::Saturating { half } => 1.0 / (1.0 + p / half),
            DensityResponse::Exponential { rate } => (-rate * p).exp(),
            DensityResponse::LinearThreshold { slope, cap } => (1.0 + slope * p).clamp(0.0, cap),
        }
    }

    pub fn supremum(&self) -> f64 {
        match *self {
            DensityResponse::LinearThreshold { slope, cap } if slope > 0.0 => cap,
            _ => 1.0,
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            DensityResponse::Constant => true,
            DensityResponse::Exponential { rate } => rate == 0.0,
            DensityResponse::LinearThreshold { slope, .. } => slope == 0.0,
            DensityResponse::Saturating { .. } => false,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DensityResponse::Saturating { half } if !(half.is_finite() && half > 0.0) => {
                Err(invalid(format!("saturating half-saturation {half} must be > 0")))
            }
            DensityResponse::Exponential { rate } if !(rate.is_finite() && rate >= 0.0) => {
                Err(invalid(format!("exponential density rate {rate} must be >= 0")))
            }
            DensityResponse::LinearThreshold { slope, cap }
                if !(slope.is_finite() && cap.is_finite() && cap >= 1.0) =>
            {
                Err(invalid("linear-threshold response needs a finite slope and cap >= 1"))
            }
            _ => Ok(()),
        }
    }
}

/// A separable vital rate `spatial(x) * age(a) * density(P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateLaw {
    pub spatial: SpatialField,
    pub age: AgeProfile,
    pub density: DensityResponse,
}

impl RateLaw {
    pub fn constant(n_x: usize, value: f64) -> Self {
        Self {
            spatial: SpatialField::constant(n_x, 1.0),
            age: AgeProfile::Constant(value),
            density: DensityResponse::Constant,
        }
    }

    #[inline]
    pub fn eval(&self, x: usize, a: f64, p: f64) -> f64 {
        self.spatial[x] * self.age.eval(a) * self.density.factor(p)
    }

    pub fn supremum(&self) -> f64 {
        self.spatial.max().max(0.0) * self.age.supremum() * self.density.supremum()
    }

    fn validate(&self, n_x: usize, name: &str) -> Result<()> {
        if self.spatial.len() != n_x {
            return Err(Error::LengthMismatch {
                expected: n_x,
                got: self.spatial.len(),
            });
        }
        if self.spatial.iter().any(|v| *v < 0.0) {
            return Err(invalid(format!("{name}: spatial profile must be >= 0")));
        }
        self.age.validate()?;
        self.density.validate()
    }
}

/// Maximal sedentary age.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

impl Horizon {
    pub fn is_finite(&self) -> bool {
        matches!(self, Horizon::Finite(_))
    }

    pub fn contains(&self, a: f64) -> bool {
        match *self {
            Horizon::Finite(h) => (0.0..=h).contains(&a),
            Horizon::Infinite => a >= 0.0 && a.is_finite(),
        }
    }
}

/// All model coefficients on one spatial resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Domain `[0, length]`.
    pub length: f64,
    /// Disperser diffusion `d`.
    pub diffusion: f64,
    /// Natural disperser mortality `m(x)`.
    pub mortality: SpatialField,
    /// Settlement rate `e(x)`.
    pub settlement: SpatialField,
    /// Competition coefficient `c(x)`.
    pub competition: SpatialField,
    /// Reproduction `beta(x, a, P)`.
    pub beta: RateLaw,
    /// Sedentary mortality `mu(x, a, P)`.
    pub mu: RateLaw,
    /// Settlement success `chi(x, P)`; its age profile must be constant.
    pub chi: RateLaw,
    pub horizon: Horizon,
    /// Essential infimum of `mu`.
    pub mu_lower: f64,
    /// Replaces `e(x)` in the loss term of the next-generation operator when
    /// set. `None` uses the settlement rate.
    pub next_gen_loss: Option<SpatialField>,
}

impl ModelParams {
    pub fn n_x(&self) -> usize {
        self.mortality.len()
    }

    /// Checks structural and sampled invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_x();
        if n < 3 {
            return Err(invalid("need at least 3 spatial nodes"));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(invalid(format!("domain length {} must be > 0", self.length)));
        }
        if !(self.diffusion.is_finite() && self.diffusion > 0.0) {
            return Err(invalid(format!("diffusion {} must be > 0", self.diffusion)));
        }
        for (name, f) in [
            ("mortality", &self.mortality),
            ("settlement", &self.settlement),
            ("competition", &self.competition),
        ] {
            if f.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: f.len(),
                });
            }
            if f.iter().any(|v| !(*v > 0.0)) {
                return Err(invalid(format!("{name} must be strictly positive")));
            }
        }
        if let Some(s) = &self.next_gen_loss {
            if s.len() != n || s.iter().any(|v| !(*v > 0.0)) {
                return Err(invalid("next-generation loss field must be positive on every node"));
            }
        }
        self.beta.validate(n, "beta")?;
        self.mu.validate(n, "mu")?;
        self.chi.validate(n, "chi")?;
        if !self.chi.age.is_constant() {
            return Err(invalid("chi must not depend on age"));
        }
        match self.horizon {
            Horizon::Finite(h) if !(h.is_finite() && h > 0.0) => {
                return Err(invalid(format!("a_max {h} must be > 0")));
            }
            _ => {}
        }
        if !(self.mu_lower.is_finite() && self.mu_lower > 0.0) {
            return Err(invalid(format!("mu_lower {} must be > 0", self.mu_lower)));
        }
        let lattice = ProbeLattice::default();
        let p_max = lattice.p_max.unwrap_or_else(|| 10.0 * self.bound_n1());
        for x in lattice.space_nodes(n) {
            for a in lattice.ages(self.probe_age_horizon()) {
                for p in lattice.densities(p_max) {
                    let mu = self.mu.eval(x, a, p);
                    if mu < self.mu_lower * (1.0 - 1e-12) {
                        return Err(invalid(format!(
                            "mu({x}, {a}, {p}) = {mu} is below mu_lower = {}",
                            self.mu_lower
                        )));
                    }
                }
            }
            for p in lattice.densities(p_max) {
                let chi = self.chi.eval(x, 0.0, p);
                if !(chi > 0.0 && chi <= 1.0) {
                    return Err(invalid(format!("chi({x}, {p}) = {chi} outside (0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// Age range used when sampling rates without a grid.
    pub(crate) fn probe_age_horizon(&self) -> f64 {
        match self.horizon {
            Horizon::Finite(h) => h,
            Horizon::Infinite => {
                let table_end = match &self.mu.age {
                    AgeProfile::Table { ages, .. } => ages[ages.len() - 1],
                    _ => 0.0,
                };
                (50.0_f64).max(table_end)
            }
        }
    }

    fn check_args(&self, x: usize, a: f64, p: f64) -> Result<()> {
        if x >= self.n_x() {
            return Err(Error::LengthMismatch {
                expected: self.n_x(),
                got: x,
            });
        }
        if !self.horizon.contains(a) {
            let horizon = match self.horizon {
                Horizon::Finite(h) => h,
                Horizon::Infinite => f64::INFINITY,
            };
            return Err(Error::AgeOutOfRange { age: a, horizon });
        }
        if !(p >= 0.0) {
            return Err(Error::NegativeDensity(p));
        }
        Ok(())
    }

    pub fn eval_beta(&self, x: usize, a: f64, p: f64) -> Result<f64> {
        self.check_args(x, a, p)?;
        Ok(self.beta.eval(x, a, p))
    }

    pub fn eval_mu(&self, x: usize, a: f64, p: f64) -> Result<f64> {
        self.check_args(x, a, p)?;
        Ok(self.mu.eval(x, a, p))
    }

    pub fn eval_chi(&self, x: usize, p: f64) -> Result<f64> {
        self.check_args(x, 0.0, p)?;
        Ok(self.chi.eval(x, 0.0, p))
    }

    pub fn beta_sup(&self) -> f64 {
        self.beta.supremum()
    }

    pub fn chi_sup(&self) -> f64 {
        self.chi.supremum().min(1.0)
    }

    pub fn settlement_max(&self) -> f64 {
        self.settlement.max()
    }

    pub fn competition_min(&self) -> f64 {
        self.competition.min()
    }

    /// Asymptotic bound on `max_x u`: `beta_sup chi_sup e_max / (c_min mu_lower)`.
    pub fn bound_n1(&self) -> f64 {
        self.beta_sup() * self.chi_sup() * self.settlement_max()
            / (self.competition_min() * self.mu_lower)
    }

    /// Asymptotic bound on the age-integrated sedentary density.
    pub fn bound_n2(&self) -> f64 {
        let ce = self.chi_sup() * self.settlement_max();
        self.beta_sup() * ce * ce / (self.competition_min() * self.mu_lower * self.mu_lower)
    }

    /// True when no rate depends on `P`.
    pub fn is_density_independent(&self) -> bool {
        self.beta.density.is_constant() && self.mu.density.is_constant() && self.chi.density.is_constant()
    }

    /// Loss rate `m + e` (or `m + s` with the override) used by the
    /// next-generation operator.
    pub fn next_gen_loss_rate(&self) -> Vec<f64> {
        let s = self.next_gen_loss.as_ref().unwrap_or(&self.settlement);
        self.mortality.iter().zip(s.iter()).map(|(m, s)| m + s).collect()
    }

    pub fn loss_rate(&self) -> Vec<f64> {
        self.mortality
            .iter()
            .zip(self.settlement.iter())
            .map(|(m, e)| m + e)
            .collect()
    }

    /// Copy with `beta`'s spatial profile scaled by `factor`.
    pub fn with_beta_scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.beta.spatial = SpatialField::from_vec(self.beta.spatial.iter().map(|v| v * factor).collect());
        out
    }
}

/// Resolution-free description of a spatial coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Constant(f64),
    /// `mean + sum amp * cos(mode * pi * x / L)`
    Cosine { mean: f64, terms: Vec<(f64, u32)> },
    /// Explicit node values; the node count must match at build time.
    Values(Vec<f64>),
}

impl FieldSpec {
    pub fn evaluate(&self, length: f64, n_x: usize) -> Result<SpatialField> {
        match self {
            FieldSpec::Constant(v) => SpatialField::new(vec![*v; n_x]),
            FieldSpec::Cosine { mean, terms } => {
                let dx = length / (n_x as f64 - 1.0);
                let vals = (0..n_x)
                    .map(|i| {
                        let x = i as f64 * dx;
                        mean + terms
                            .iter()
                            .map(|(amp, mode)| {
                                amp * (*mode as f64 * std::f64::consts::PI * x / length).cos()
                            })
                            .sum::<f64>()
                    })
                    .collect();
                SpatialField::new(vals)
            }
            FieldSpec::Values(v) => {
                if v.len() != n_x {
                    return Err(Error::LengthMismatch {
                        expected: n_x,
                        got: v.len(),
                    });
                }
                SpatialField::new(v.clone())
            }
        }
    }
}

/// Resolution-free description of a [`RateLaw`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    #[serde(default = "unit_field")]
    pub space: FieldSpec,
    #[serde(default = "unit_age")]
    pub age: AgeProfile,
    #[serde(default = "constant_density")]
    pub density: DensityResponse,
}

fn unit_field() -> FieldSpec {
    FieldSpec::Constant(1.0)
}

fn unit_age() -> AgeProfile {
    AgeProfile::Constant(1.0)
}

fn constant_density() -> DensityResponse {
    DensityResponse::Constant
}

impl LawSpec {
    pub fn constant(value: f64) -> Self {
        Self {
            space: FieldSpec::Constant(1.0),
            age: AgeProfile::Constant(value),
            density: DensityResponse::Constant,
        }
    }

    pub fn with_density(mut self, density: DensityResponse) -> Self {
        self.density = density;
        self
    }

    pub fn build(&self, length: f64, n_x: usize) -> Result<RateLaw> {
        Ok(RateLaw {
            spatial: self.space.evaluate(length, n_x)?,
            age: self.age.clone(),
            density: self.density,
        })
    }
}

/// Resolution-free model description, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default = "unit_length")]
    pub length: f64,
    pub diffusion: f64,
    pub mortality: FieldSpec,
    pub settlement: FieldSpec,
    pub competition: FieldSpec,
    pub beta: LawSpec,
    pub mu: LawSpec,
    #[serde(default = "unit_law")]
    pub chi: LawSpec,
    #[serde(default = "infinite_horizon")]
    pub a_max: Horizon,
    /// Inferred from sampling `mu` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_gen_loss: Option<FieldSpec>,
}

fn unit_length() -> f64 {
    1.0
}

fn unit_law() -> LawSpec {
    LawSpec::constant(1.0)
}

fn infinite_horizon() -> Horizon {
    Horizon::Infinite
}

impl ModelSpec {
    /// The constant-coefficient family used throughout the tests:
    /// `chi = e = m = c = mu = 1`, `d = 1`, `L = 1`, infinite horizon and
    /// `beta = beta0 * density(P)`.
    pub fn constant_benchmark(beta0: f64, density: DensityResponse) -> Self {
        Self {
            length: 1.0,
            diffusion: 1.0,
            mortality: FieldSpec::Constant(1.0),
            settlement: FieldSpec::Constant(1.0),
            competition: FieldSpec::Constant(1.0),
            beta: LawSpec::constant(beta0).with_density(density),
            mu: LawSpec::constant(1.0),
            chi: LawSpec::constant(1.0),
            a_max: Horizon::Infinite,
            mu_lower: Some(1.0),
            next_gen_loss: None,
        }
    }

    pub fn build(&self, n_x: usize) -> Result<ModelParams> {
        let l = self.length;
        let mut params = ModelParams {
            length: l,
            diffusion: self.diffusion,
            mortality: self.mortality.evaluate(l, n_x)?,
            settlement: self.settlement.evaluate(l, n_x)?,
            competition: self.competition.evaluate(l, n_x)?,
            beta: self.beta.build(l, n_x)?,
            mu: self.mu.build(l, n_x)?,
            chi: self.chi.build(l, n_x)?,
            horizon: self.a_max,
            mu_lower: self.mu_lower.unwrap_or(f64::NAN),
            next_gen_loss: match &self.next_gen_loss {
                Some(f) => Some(f.evaluate(l, n_x)?),
                None => None,
            },
        };
        if self.mu_lower.is_none() {
            params.mu_lower = inferred_mu_lower(&params);
        }
        params.validate()?;
        Ok(params)
    }
}

/// Smallest sampled `mu`, with the density range set from a provisional
/// bound that uses the `P = 0` infimum.
fn inferred_mu_lower(params: &ModelParams) -> f64 {
    let lattice = ProbeLattice::default();
    let n = params.n_x();
    let ages: Vec<f64> = lattice.ages(params.probe_age_horizon()).collect();
    let at_zero = lattice
        .space_nodes(n)
        .flat_map(|x| ages.iter().map(move |&a| (x, a)))
        .map(|(x, a)| params.mu.eval(x, a, 0.0))
        .fold(f64::INFINITY, f64::min);
    let mut provisional = params.clone();
    provisional.mu_lower = at_zero;
    let p_max = 10.0 * provisional.bound_n1();
    let mut lowest = at_zero;
    for x in lattice.space_nodes(n) {
        for &a in &ages {
            for p in lattice.densities(p_max) {
                lowest = lowest.min(params.mu.eval(x, a, p));
            }
        }
    }
    lowest
}

#[cfg(test)]
mod tests {
    use super::*;

    fn benchmark(beta0: f64, density: DensityResponse) -> ModelParams {
        ModelSpec::constant_benchmark(beta0, density).build(9).unwrap()
    }

    #[test]
    fn constant_beta_evaluates_to_its_value() {
        let p = benchmark(1.0, DensityResponse::Constant);
        for (x, a, dens) in [(0, 0.0, 0.0), (4, 3.5, 2.0), (8, 100.0, 50.0)] {
            assert_eq!(p.eval_beta(x, a, dens).unwrap(), 1.0);
        }
    }

    #[test]
    fn saturating_beta_halves_at_half_saturation() {
        let p = benchmark(6.0, DensityResponse::Saturating { half: 1.0 });
        assert!((p.eval_beta(3, 0.5, 1.0).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_spatial_profile_gives_zero_rate() {
        let mut p = benchmark(6.0, DensityResponse::Constant);
        p.beta.spatial = SpatialField::zeros(9);
        for x in 0..9 {
            assert_eq!(p.eval_beta(x, 1.0, 0.3).unwrap(), 0.0);
        }
    }

    #[test]
    fn eval_rejects_bad_arguments() {
        let mut p = benchmark(1.0, DensityResponse::Constant);
        assert!(matches!(p.eval_beta(0, 0.0, -1.0), Err(Error::NegativeDensity(_))));
        assert!(matches!(p.eval_mu(0, -0.5, 0.0), Err(Error::AgeOutOfRange { .. })));
        p.horizon = Horizon::Finite(2.0);
        assert!(matches!(p.eval_beta(0, 2.5, 0.0), Err(Error::AgeOutOfRange { .. })));
        assert!(p.eval_beta(0, 2.0, 0.0).is_ok());
    }

    #[test]
    fn density_responses_are_one_at_zero() {
        for r in [
            DensityResponse::Constant,
            DensityResponse::Saturating { half: 0.3 },
            DensityResponse::Exponential { rate: 2.0 },
            DensityResponse::LinearThreshold { slope: -0.5, cap: 1.0 },
            DensityResponse::LinearThreshold { slope: 0.5, cap: 3.0 },
        ] {
            assert_eq!(r.factor(0.0), 1.0);
        }
    }

    #[test]
    fn linear_threshold_is_clamped() {
        let up = DensityResponse::LinearThreshold { slope: 1.0, cap: 2.5 };
        assert_eq!(up.factor(10.0), 2.5);
        let down = DensityResponse::LinearThreshold { slope: -1.0, cap: 1.0 };
        assert_eq!(down.factor(3.0), 0.0);
    }

    #[test]
    fn age_table_interpolates_and_extrapolates_flat() {
        let t = AgeProfile::Table {
            ages: vec![0.0, 1.0, 3.0],
            values: vec![0.0, 2.0, 1.0],
        };
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(2.0), 1.5);
        assert_eq!(t.eval(7.0), 1.0);
        assert_eq!(t.supremum(), 2.0);
    }

    #[test]
    fn bounds_match_closed_forms() {
        let p = benchmark(6.0, DensityResponse::Saturating { half: 1.0 });
        assert!((p.bound_n1() - 6.0).abs() < 1e-15);
        assert!((p.bound_n2() - 6.0).abs() < 1e-15);
    }

    #[test]
    fn validation_catches_mu_below_floor() {
        let mut spec = ModelSpec::constant_benchmark(1.0, DensityResponse::Constant);
        spec.mu_lower = Some(2.0);
        assert!(spec.build(5).is_err());
    }

    #[test]
    fn validation_catches_chi_above_one() {
        let mut spec = ModelSpec::constant_benchmark(1.0, DensityResponse::Constant);
        spec.chi = LawSpec::constant(1.5);
        assert!(spec.build(5).is_err());
    }

    #[test]
    fn mu_lower_is_inferred_when_missing() {
        let mut spec = ModelSpec::constant_benchmark(1.0, DensityResponse::Constant);
        spec.mu_lower = None;
        spec.mu = LawSpec::constant(0.5).with_density(DensityResponse::LinearThreshold { slope: 1.0, cap: 2.0 });
        let p = spec.build(5).unwrap();
        assert_eq!(p.mu_lower, 0.5);
    }

    #[test]
    fn cosine_field_matches_formula() {
        let f = FieldSpec::Cosine {
            mean: 1.0,
            terms: vec![(0.5, 1)],
        }
        .evaluate(2.0, 3)
        .unwrap();
        assert!((f[0] - 1.5).abs() < 1e-15);
        assert!((f[1] - 1.0).abs() < 1e-15);
        assert!((f[2] - 0.5).abs() < 1e-15);
    }
}
