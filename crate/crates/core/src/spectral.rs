//! Net reproductive rate, principal eigenvalues and the growth bound of the
//! problem linearized at the trivial state.
//!
//! Everything is evaluated at `P = 0`. With `K_k(x) = chi e int beta S e^{-ka} da`,
//! `lambda_hat(k)` is the principal eigenvalue of `d Lap + K_k - m - e`, and
//! the growth bound is the root of `lambda_hat(k) = k`.

use crate::error::{invalid, Error, Result};
use crate::grid::Discretization;
use crate::kernel;
use crate::linalg::{sup_norm, Tridiagonal};
use crate::rates::{Horizon, ModelParams, SpatialField};
use crate::solver::AgeField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub eig_tol: f64,
    pub max_iter: usize,
    pub root_tol: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            eig_tol: 1e-10,
            max_iter: 100_000,
            root_tol: 1e-9,
        }
    }
}

/// Signs closer to zero than this are treated as zero.
pub const SIGN_BAND: f64 = 1e-8;

pub fn sign_with_band(v: f64) -> i8 {
    if v.abs() < SIGN_BAND {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    /// Positive, max-normalized.
    pub vector: SpatialField,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub r0: f64,
    pub lambda_hat_0: f64,
    pub s_l0: Option<f64>,
    /// Principal eigenvector at `k = s_l0`, or at `k = 0` when the growth
    /// bound is absent.
    pub phi: SpatialField,
    /// Age component built from `phi` with decay rate `s_l0` (0 when absent).
    pub phi_age: AgeField,
    pub iterations: usize,
    pub residual: f64,
    /// `(k, lambda_hat(k))` samples.
    pub samples: Vec<(f64, f64)>,
}

/// Principal eigenpair of the tridiagonal Metzler matrix `a` by shift-invert
/// power iteration. The shift sits just above the Collatz-Wielandt upper
/// bound of the current iterate, so `shift - a` stays a nonsingular
/// M-matrix and its inverse is positive.
pub fn principal_pair(a: &Tridiagonal, weights: &[f64], cfg: &SpectralConfig) -> Result<Eigenpair> {
    let n = a.len();
    let norm = (0..n)
        .map(|i| a.diag[i].abs() + a.lower[i].abs() + a.upper[i].abs())
        .fold(0.0, f64::max);
    let tol = cfg.eig_tol.max(64.0 * f64::EPSILON * norm);
    let mut phi = vec![1.0; n];
    let mut image = vec![0.0; n];
    let mut psi = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for it in 0..cfg.max_iter {
        a.apply_into(&phi, &mut image);
        let num: f64 = (0..n).map(|i| weights[i] * phi[i] * image[i]).sum();
        let den: f64 = (0..n).map(|i| weights[i] * phi[i] * phi[i]).sum();
        let value = num / den;
        let residual = (0..n).map(|i| (image[i] - value * phi[i]).abs()).fold(0.0, f64::max);
        if residual <= tol {
            return Ok(Eigenpair {
                value,
                vector: SpatialField::from_vec(phi),
                iterations: it,
                residual,
            });
        }
        if residual < 0.5 * best {
            best = residual;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 200 {
                return Err(Error::NoConvergence {
                    what: "principal eigenvalue",
                    iterations: it,
                    residual,
                });
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            if phi[i] > 0.0 {
                let r = image[i] / phi[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        let sigma = hi + (hi - lo).max(1e-8 * (1.0 + hi.abs()));
        let shifted = a.scaled_plus_diag(-1.0, &vec![sigma; n]);
        shifted.solve_into(&phi, &mut psi, &mut scratch)?;
        let top = psi.iter().copied().fold(0.0, f64::max);
        if !(top > 0.0 && top.is_finite()) {
            return Err(Error::NoConvergence {
                what: "principal eigenvalue",
                iterations: it,
                residual,
            });
        }
        for i in 0..n {
            phi[i] = (psi[i] / top).max(0.0);
        }
    }
    Err(Error::NoConvergence {
        what: "principal eigenvalue",
        iterations: cfg.max_iter,
        residual: best,
    })
}

/// Linearized operators for one parameter set and grid.
pub struct Spectral<'a> {
    params: &'a ModelParams,
    grid: &'a Discretization,
    cfg: SpectralConfig,
    /// `d Lap`
    diffusion: Tridiagonal,
    weights: Vec<f64>,
    /// `chi e w_j beta_j S_j` per node and age, so `K_k = sum_j c_j e^{-k a_j}`.
    coeffs: Vec<f64>,
}

impl<'a> Spectral<'a> {
    pub fn new(params: &'a ModelParams, grid: &'a Discretization, cfg: SpectralConfig) -> Result<Self> {
        if params.n_x() != grid.n_x {
            return Err(Error::LengthMismatch {
                expected: grid.n_x,
                got: params.n_x(),
            });
        }
        let na1 = grid.n_ages();
        let wa = grid.age_weights();
        let mut coeffs = vec![0.0; grid.n_x * na1];
        for x in 0..grid.n_x {
            let s = kernel::survival(params, grid, x, 0.0);
            let pre = params.chi.eval(x, 0.0, 0.0) * params.settlement[x];
            for j in 0..na1 {
                coeffs[x * na1 + j] = pre * wa[j] * params.beta.eval(x, grid.age(j), 0.0) * s[j];
            }
        }
        Ok(Self {
            params,
            grid,
            cfg,
            diffusion: grid.laplacian(params.diffusion),
            weights: grid.space_weights(),
            coeffs,
        })
    }

    pub fn kernel(&self, k: f64) -> Result<SpatialField> {
        if !k.is_finite() {
            return Err(invalid(format!("k = {k} must be finite")));
        }
        if self.params.horizon == Horizon::Infinite && k <= -self.params.mu_lower {
            return Err(invalid(format!(
                "k = {k} <= -mu_lower = {}: the age integral diverges",
                -self.params.mu_lower
            )));
        }
        let na1 = self.grid.n_ages();
        let decay: Vec<f64> = (0..na1).map(|j| (-k * self.grid.age(j)).exp()).collect();
        let values = (0..self.grid.n_x)
            .map(|x| kernel::dot(&self.coeffs[x * na1..(x + 1) * na1], &decay))
            .collect();
        SpatialField::new(values)
    }

    /// `d Lap + diag(K_k - m - e)`.
    fn operator(&self, k: f64) -> Result<Tridiagonal> {
        let kk = self.kernel(k)?;
        let diag: Vec<f64> = self
            .params
            .loss_rate()
            .iter()
            .zip(kk.iter())
            .map(|(l, k)| k - l)
            .collect();
        Ok(self.diffusion.scaled_plus_diag(1.0, &diag))
    }

    pub fn principal(&self, k: f64) -> Result<Eigenpair> {
        principal_pair(&self.operator(k)?, &self.weights, &self.cfg)
    }

    pub fn lambda_hat(&self, k: f64) -> Result<f64> {
        Ok(self.principal(k)?.value)
    }

    /// Spectral radius of `diag(K_0) (m + e - d Lap)^{-1}` by power iteration.
    pub fn r0(&self) -> Result<f64> {
        let k0 = self.kernel(0.0)?;
        if k0.max() <= 0.0 {
            return Ok(0.0);
        }
        let n = self.grid.n_x;
        let resolvent = self.diffusion.scaled_plus_diag(-1.0, &self.params.next_gen_loss_rate());
        let mut v = vec![1.0; n];
        let mut y = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let mut residual = f64::INFINITY;
        for _ in 0..self.cfg.max_iter {
            resolvent.solve_into(&v, &mut y, &mut scratch)?;
            for i in 0..n {
                y[i] *= k0[i];
            }
            let r = y.iter().copied().fold(0.0, f64::max);
            residual = (0..n).map(|i| (y[i] - r * v[i]).abs()).fold(0.0, f64::max);
            if residual <= 1e-12 * r {
                return Ok(r);
            }
            for i in 0..n {
                v[i] = y[i] / r;
            }
        }
        Err(Error::NoConvergence {
            what: "next-generation power iteration",
            iterations: self.cfg.max_iter,
            residual,
        })
    }

    /// `1 / lambda*` where `lambda*` makes the principal eigenvalue of
    /// `d Lap - (m + e) + lambda* K_0` vanish. Independent of [`Spectral::r0`].
    pub fn r0_by_weighted_eigenproblem(&self) -> Result<f64> {
        let k0 = self.kernel(0.0)?;
        if k0.max() <= 0.0 {
            return Ok(0.0);
        }
        let loss = self.params.next_gen_loss_rate();
        let nu = |lam: f64| -> Result<f64> {
            let diag: Vec<f64> = (0..self.grid.n_x).map(|i| lam * k0[i] - loss[i]).collect();
            Ok(principal_pair(&self.diffusion.scaled_plus_diag(1.0, &diag), &self.weights, &self.cfg)?.value)
        };
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut grow = 0;
        while nu(hi)? < 0.0 {
            lo = hi;
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(Error::Bracket("weighted eigenproblem: no sign change".into()));
            }
        }
        while hi - lo > 1e-14 * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if nu(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(2.0 / (lo + hi))
    }

    /// Root of `lambda_hat(k) = k`; absent for an infinite horizon with
    /// `lambda_hat(0) < 0`.
    pub fn growth_bound(&self) -> Result<Option<f64>> {
        let g = |k: f64| -> Result<f64> { Ok(self.lambda_hat(k)? - k) };
        let (mut lo, mut hi) = match self.params.horizon {
            Horizon::Infinite => {
                let l0 = self.lambda_hat(0.0)?;
                if l0 < 0.0 {
                    return Ok(None);
                }
                if l0 == 0.0 {
                    return Ok(Some(0.0));
                }
                (0.0, l0)
            }
            Horizon::Finite(_) => {
                let mut lo = -1.0;
                let mut hi = 1.0;
                let mut tries = 0;
                while g(hi)? > 0.0 {
                    lo = hi;
                    hi *= 2.0;
                    tries += 1;
                    if tries > 60 {
                        return Err(Error::Bracket(format!("lambda_hat(k) - k still positive at k = {hi}")));
                    }
                }
                tries = 0;
                while g(lo)? < 0.0 {
                    hi = lo;
                    lo *= 2.0;
                    tries += 1;
                    if tries > 60 {
                        return Err(Error::Bracket(format!("lambda_hat(k) - k still negative at k = {lo}")));
                    }
                }
                (lo, hi)
            }
        };
        if g(hi)? > 0.0 || g(lo)? < 0.0 {
            return Err(Error::Bracket(format!("no sign change of lambda_hat(k) - k on [{lo}, {hi}]")));
        }
        let width = 1e-3 * self.cfg.root_tol;
        while hi - lo > width {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }

    /// `chi(x, 0) e(x) S(x, a) e^{-lambda a} phi(x)` on the grid.
    pub fn eigenfunction_pair(&self, lambda0: f64, phi: &[f64]) -> Result<AgeField> {
        if phi.len() != self.grid.n_x {
            return Err(Error::LengthMismatch {
                expected: self.grid.n_x,
                got: phi.len(),
            });
        }
        let mut out = AgeField::for_grid(self.grid);
        for x in 0..self.grid.n_x {
            let s = kernel::survival(self.params, self.grid, x, 0.0);
            let pre = self.params.chi.eval(x, 0.0, 0.0) * self.params.settlement[x] * phi[x];
            for (j, sj) in s.iter().enumerate() {
                out.set(x, j, pre * sj * (-lambda0 * self.grid.age(j)).exp());
            }
        }
        Ok(out)
    }

    pub fn report(&self, k_samples: &[f64]) -> Result<SpectralReport> {
        let r0 = self.r0()?;
        let at_zero = self.principal(0.0)?;
        let s_l0 = self.growth_bound()?;
        let pair = match s_l0 {
            Some(s) => self.principal(s)?,
            None => at_zero.clone(),
        };
        let phi_age = self.eigenfunction_pair(s_l0.unwrap_or(0.0), &pair.vector)?;
        let samples = k_samples
            .iter()
            .map(|&k| Ok((k, self.lambda_hat(k)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectralReport {
            r0,
            lambda_hat_0: at_zero.value,
            s_l0,
            iterations: pair.iterations,
            residual: pair.residual,
            phi: pair.vector,
            phi_age,
            samples,
        })
    }
}

pub fn kernel_k(params: &ModelParams, grid: &Discretization, k: f64) -> Result<SpatialField> {
    Spectral::new(params, grid, SpectralConfig::default())?.kernel(k)
}

pub fn principal_eigenvalue(params: &ModelParams, grid: &Discretization, k: f64) -> Result<(f64, SpatialField)> {
    let pair = Spectral::new(params, grid, SpectralConfig::default())?.principal(k)?;
    Ok((pair.value, pair.vector))
}

pub fn compute_r0(params: &ModelParams, grid: &Discretization) -> Result<f64> {
    Spectral::new(params, grid, SpectralConfig::default())?.r0()
}

pub fn growth_bound(params: &ModelParams, grid: &Discretization) -> Result<Option<f64>> {
    Spectral::new(params, grid, SpectralConfig::default())?.growth_bound()
}

pub fn eigenfunction_pair(params: &ModelParams, grid: &Discretization, lambda0: f64, phi: &[f64]) -> Result<AgeField> {
    Spectral::new(params, grid, SpectralConfig::default())?.eigenfunction_pair(lambda0, phi)
}

pub fn spectral_report(params: &ModelParams, grid: &Discretization, k_samples: &[f64]) -> Result<SpectralReport> {
    Spectral::new(params, grid, SpectralConfig::default())?.report(k_samples)
}

/// Residual `|lambda_hat(s) - s|` at a claimed growth bound.
pub fn growth_bound_residual(params: &ModelParams, grid: &Discretization, s: f64) -> Result<f64> {
    let sp = Spectral::new(params, grid, SpectralConfig::default())?;
    Ok((sp.lambda_hat(s)? - s).abs())
}

/// Eigenvector residual `||M phi - lambda phi||`, for reporting.
pub fn eigen_residual(a: &Tridiagonal, pair: &Eigenpair) -> f64 {
    let image = a.apply(&pair.vector);
    let diff: Vec<f64> = image.iter().zip(pair.vector.iter()).map(|(m, p)| m - pair.value * p).collect();
    sup_norm(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::rates::{DensityResponse, FieldSpec, ModelSpec, RateLaw};

    fn bench(beta0: f64, n: usize, dt: f64) -> (ModelParams, Discretization) {
        let p = ModelSpec::constant_benchmark(beta0, DensityResponse::Constant).build(n).unwrap();
        let g = build_grid(&p, n, dt, 1e-10).unwrap();
        (p, g)
    }

    #[test]
    fn zero_reproduction_gives_zero_kernel_and_r0() {
        let (mut p, g) = bench(4.0, 9, 0.05);
        p.beta = RateLaw::constant(9, 0.0);
        assert!(kernel_k(&p, &g, 0.0).unwrap().iter().all(|v| *v == 0.0));
        assert_eq!(compute_r0(&p, &g).unwrap(), 0.0);
        let (lam, phi) = principal_eigenvalue(&p, &g, 0.0).unwrap();
        assert!((lam + 2.0).abs() < 1e-10);
        assert!(phi.iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn constant_kernel_matches_closed_form() {
        let (p, g) = bench(4.0, 9, 0.01);
        assert!((kernel_k(&p, &g, 0.0).unwrap()[3] - 4.0).abs() < 1e-4);
        assert!((kernel_k(&p, &g, 1.0).unwrap()[3] - 2.0).abs() < 1e-4);
    }

    #[test]
    fn divergent_kernel_is_rejected() {
        let (p, g) = bench(4.0, 9, 0.05);
        assert!(kernel_k(&p, &g, -1.0).is_err());
        assert!(kernel_k(&p, &g, -0.5).is_ok());
    }

    #[test]
    fn constant_benchmark_eigenvalue() {
        let (p, g) = bench(4.0, 17, 0.01);
        let (lam, phi) = principal_eigenvalue(&p, &g, 0.0).unwrap();
        assert!((lam - 2.0).abs() < 1e-4);
        assert!(phi.iter().all(|v| (v - 1.0).abs() < 1e-8));
        let (lam1, _) = principal_eigenvalue(&p, &g, 1.0).unwrap();
        assert!(lam1 < lam);
        assert!(lam1.abs() < 1e-4);
    }

    #[test]
    fn r0_closed_forms() {
        for (beta0, want) in [(1.0, 0.5), (4.0, 2.0)] {
            let (p, g) = bench(beta0, 17, 0.01);
            let r = compute_r0(&p, &g).unwrap();
            assert!((r - want).abs() < 1e-4 * want, "{r}");
        }
    }

    #[test]
    fn heterogeneous_eigenvector_is_positive_and_accurate() {
        let mut spec = ModelSpec::constant_benchmark(3.0, DensityResponse::Constant);
        spec.mortality = FieldSpec::Cosine {
            mean: 1.0,
            terms: vec![(0.8, 1), (0.1, 3)],
        };
        spec.diffusion = 0.01;
        let p = spec.build(33).unwrap();
        let g = build_grid(&p, 33, 0.05, 1e-8).unwrap();
        let sp = Spectral::new(&p, &g, SpectralConfig::default()).unwrap();
        let pair = sp.principal(0.0).unwrap();
        assert!(pair.vector.min() > 0.0);
        assert!(pair.residual <= 1e-10);
        assert!(eigen_residual(&sp.operator(0.0).unwrap(), &pair) <= 1e-10);
    }

    #[test]
    fn growth_bound_examples() {
        let (p, g) = bench(4.0, 9, 0.005);
        let s = growth_bound(&p, &g).unwrap().unwrap();
        assert!((s - (17f64.sqrt() - 3.0) / 2.0).abs() < 1e-4);
        let (p1, g1) = bench(1.0, 9, 0.05);
        assert_eq!(growth_bound(&p1, &g1).unwrap(), None);
    }

    #[test]
    fn finite_horizon_growth_bound_can_be_negative() {
        let mut spec = ModelSpec::constant_benchmark(1.0, DensityResponse::Constant);
        spec.a_max = Horizon::Finite(5.0);
        let p = spec.build(9).unwrap();
        let g = build_grid(&p, 9, 0.01, 1e-8).unwrap();
        let s = growth_bound(&p, &g).unwrap().unwrap();
        assert!(s < 0.0);
        assert!(growth_bound_residual(&p, &g, s).unwrap() < 1e-9);
    }

    #[test]
    fn age_component_for_survival_only_decay() {
        let (p, g) = bench(6.0, 9, 0.05);
        let pair = eigenfunction_pair(&p, &g, 0.0, &[1.0; 9]).unwrap();
        for j in [0, 10, 100] {
            assert!((pair.get(4, j) - (-g.age(j)).exp()).abs() < 1e-12);
        }
        let pair = eigenfunction_pair(&p, &g, 1.0, &[1.0; 9]).unwrap();
        assert!((pair.get(2, 20) - (-2.0 * g.age(20)).exp()).abs() < 1e-12);
        assert_eq!(pair.get(0, 0), 1.0);
    }
}
