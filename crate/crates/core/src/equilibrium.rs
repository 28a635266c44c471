//! Positive steady state. For a frozen total population `P` the disperser
//! profile solves the logistic elliptic problem
//! `d Lap u + (K_P - m - e) u - c u^2 = 0`; the steady `P` is then the fixed
//! point of `H(P) = int int chi(P) e u_P S_P da dx`.

use crate::error::{Error, Result};
use crate::grid::Discretization;
use crate::kernel;
use crate::linalg::{sup_norm, Tridiagonal};
use crate::rates::{audit_assumptions, ModelParams, SpatialField};
use crate::solver::{AgeField, PopulationState};
use crate::spectral::{principal_pair, Spectral, SpectralConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumConfig {
    /// Target for `|H(P*) - P*|`.
    pub fp_tol: f64,
    /// Target for the elliptic residual.
    pub fkpp_tol: f64,
    /// Principal eigenvalues at or below this count as non-positive.
    pub degenerate_band: f64,
    pub max_newton: usize,
    pub max_monotone: usize,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        Self {
            fp_tol: 1e-10,
            fkpp_tol: 1e-9,
            degenerate_band: 1e-10,
            max_newton: 200,
            max_monotone: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FkppSolution {
    pub u: SpatialField,
    pub residual: f64,
    pub iterations: usize,
    /// False when Newton failed and monotone iteration produced `u`.
    pub by_newton: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub r0: f64,
    /// No positive equilibrium: `r0 <= 1`, all fields zero.
    pub trivial: bool,
    pub p_star: f64,
    pub u_star: SpatialField,
    pub w_star: AgeField,
    pub fkpp_residual: f64,
    pub fixed_point_residual: f64,
    /// `(P, H(P))` pairs in increasing `P`.
    pub h_samples: Vec<(f64, f64)>,
    /// False when the sampled audit could not confirm that the two
    /// lifetime integrals decrease in `P`.
    pub uniqueness_verified: bool,
}

impl EquilibriumReport {
    pub fn state(&self, params: &ModelParams, grid: &Discretization) -> Result<PopulationState> {
        PopulationState::new(params, grid, 0.0, self.u_star.clone(), self.w_star.clone())
    }
}

/// `d Lap u + r u - c u^2`.
fn fkpp_operator(diffusion: &Tridiagonal, r: &[f64], c: &[f64], u: &[f64]) -> Vec<f64> {
    let mut out = diffusion.apply(u);
    for i in 0..u.len() {
        out[i] += r[i] * u[i] - c[i] * u[i] * u[i];
    }
    out
}

pub struct Equilibrium<'a> {
    params: &'a ModelParams,
    grid: &'a Discretization,
    cfg: EquilibriumConfig,
    diffusion: Tridiagonal,
    space_w: Vec<f64>,
    age_w: Vec<f64>,
}

impl<'a> Equilibrium<'a> {
    pub fn new(params: &'a ModelParams, grid: &'a Discretization, cfg: EquilibriumConfig) -> Result<Self> {
        if params.n_x() != grid.n_x {
            return Err(Error::LengthMismatch {
                expected: grid.n_x,
                got: params.n_x(),
            });
        }
        Ok(Self {
            params,
            grid,
            cfg,
            diffusion: grid.laplacian(params.diffusion),
            space_w: grid.space_weights(),
            age_w: grid.age_weights(),
        })
    }

    fn growth_rate(&self, p: f64) -> Vec<f64> {
        let k = kernel::k_field(self.params, self.grid, 0.0, p);
        k.iter().zip(self.params.loss_rate()).map(|(k, l)| k - l).collect()
    }

    pub fn solve_fkpp(&self, p: f64) -> Result<FkppSolution> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::NegativeDensity(p));
        }
        let n = self.grid.n_x;
        let r = self.growth_rate(p);
        let c = self.params.competition.as_slice();
        let linear = self.diffusion.scaled_plus_diag(1.0, &r);
        let pair = principal_pair(&linear, &self.space_w, &SpectralConfig::default())?;
        if pair.value <= self.cfg.degenerate_band {
            return Ok(FkppSolution {
                u: SpatialField::zeros(n),
                residual: 0.0,
                iterations: pair.iterations,
                by_newton: true,
            });
        }
        let top = r.iter().copied().fold(0.0, f64::max) / self.params.competition_min() + 1.0;
        match self.newton(&r, c, top) {
            Ok(sol) => Ok(sol),
            Err(_) => self.monotone(&r, c, top),
        }
    }

    /// Damped Newton from the constant upper solution `top`.
    fn newton(&self, r: &[f64], c: &[f64], top: f64) -> Result<FkppSolution> {
        let n = r.len();
        let mut u = vec![top; n];
        let mut f = fkpp_operator(&self.diffusion, r, c, &u);
        let mut res = sup_norm(&f);
        let target = 1e-2 * self.cfg.fkpp_tol;
        for it in 0..self.cfg.max_newton {
            if res <= target {
                return Ok(FkppSolution {
                    u: SpatialField::from_vec(u),
                    residual: res,
                    iterations: it,
                    by_newton: true,
                });
            }
            let jd: Vec<f64> = (0..n).map(|i| r[i] - 2.0 * c[i] * u[i]).collect();
            let jac = self.diffusion.scaled_plus_diag(1.0, &jd);
            let neg: Vec<f64> = f.iter().map(|v| -v).collect();
            let delta = jac.solve(&neg)?;
            let mut theta = 1.0;
            loop {
                let trial: Vec<f64> = (0..n).map(|i| (u[i] + theta * delta[i]).max(0.0)).collect();
                let ft = fkpp_operator(&self.diffusion, r, c, &trial);
                let rt = sup_norm(&ft);
                if rt < res || theta < 1e-6 {
                    if !(rt < res) {
                        // stagnated at round-off
                        if res <= self.cfg.fkpp_tol {
                            return Ok(FkppSolution {
                                u: SpatialField::from_vec(u),
                                residual: res,
                                iterations: it,
                                by_newton: true,
                            });
                        }
                        return Err(Error::NoConvergence {
                            what: "Newton for the elliptic steady state",
                            iterations: it,
                            residual: res,
                        });
                    }
                    u = trial;
                    f = ft;
                    res = rt;
                    break;
                }
                theta *= 0.5;
            }
        }
        if res <= self.cfg.fkpp_tol {
            return Ok(FkppSolution {
                u: SpatialField::from_vec(u),
                residual: res,
                iterations: self.cfg.max_newton,
                by_newton: true,
            });
        }
        Err(Error::NoConvergence {
            what: "Newton for the elliptic steady state",
            iterations: self.cfg.max_newton,
            residual: res,
        })
    }

    /// `(gamma - d Lap) u_{k+1} = gamma u_k + r u_k - c u_k^2` from the upper
    /// solution; decreases monotonically to the maximal solution.
    fn monotone(&self, r: &[f64], c: &[f64], top: f64) -> Result<FkppSolution> {
        let n = r.len();
        let gamma = (0..n).map(|i| 2.0 * c[i] * top - r[i]).fold(0.0, f64::max) + 1.0;
        let system = self.diffusion.scaled_plus_diag(-1.0, &vec![gamma; n]);
        let mut u = vec![top; n];
        let mut next = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let mut res = f64::INFINITY;
        for it in 0..self.cfg.max_monotone {
            let rhs: Vec<f64> = (0..n).map(|i| gamma * u[i] + r[i] * u[i] - c[i] * u[i] * u[i]).collect();
            system.solve_into(&rhs, &mut next, &mut scratch)?;
            std::mem::swap(&mut u, &mut next);
            if it % 16 == 0 {
                res = sup_norm(&fkpp_operator(&self.diffusion, r, c, &u));
                if res <= self.cfg.fkpp_tol {
                    return Ok(FkppSolution {
                        u: SpatialField::from_vec(u),
                        residual: res,
                        iterations: it + 1,
                        by_newton: false,
                    });
                }
            }
        }
        Err(Error::NoConvergence {
            what: "monotone iteration for the elliptic steady state",
            iterations: self.cfg.max_monotone,
            residual: res,
        })
    }

    /// Sedentary mass sustained by `u`: `int chi(P) e u int S_P da dx`.
    fn settled_mass(&self, p: f64, u: &[f64]) -> f64 {
        (0..self.grid.n_x)
            .map(|x| {
                let s = kernel::survival(self.params, self.grid, x, p);
                self.space_w[x]
                    * self.params.chi.eval(x, 0.0, p)
                    * self.params.settlement[x]
                    * u[x]
                    * kernel::dot(&self.age_w, &s)
            })
            .sum()
    }

    pub fn h_map(&self, p: f64) -> Result<f64> {
        let sol = self.solve_fkpp(p)?;
        Ok(self.settled_mass(p, &sol.u))
    }

    /// `chi(P) e u S_P(a)` on the grid.
    pub fn sedentary_profile(&self, p: f64, u: &[f64]) -> AgeField {
        let mut w = AgeField::for_grid(self.grid);
        for x in 0..self.grid.n_x {
            let s = kernel::survival(self.params, self.grid, x, p);
            let pre = self.params.chi.eval(x, 0.0, p) * self.params.settlement[x] * u[x];
            for (j, sj) in s.iter().enumerate() {
                w.set(x, j, pre * sj);
            }
        }
        w
    }

    pub fn positive_equilibrium(&self) -> Result<EquilibriumReport> {
        let r0 = Spectral::new(self.params, self.grid, SpectralConfig::default())?.r0()?;
        let n = self.grid.n_x;
        if r0 <= 1.0 {
            return Ok(EquilibriumReport {
                r0,
                trivial: true,
                p_star: 0.0,
                u_star: SpatialField::zeros(n),
                w_star: AgeField::for_grid(self.grid),
                fkpp_residual: 0.0,
                fixed_point_residual: 0.0,
                h_samples: Vec::new(),
                uniqueness_verified: true,
            });
        }
        let uniqueness_verified = audit_assumptions(self.params, self.grid).a7.holds;
        let mut samples = Vec::new();
        let mut h = |p: f64| -> Result<f64> {
            let v = self.h_map(p)?;
            samples.push((p, v));
            Ok(v)
        };
        let p_star = if self.params.is_density_independent() {
            h(0.0)?
        } else {
            let h0 = h(0.0)?;
            if h0 <= 0.0 {
                return Err(Error::Bracket(format!("H(0) = {h0} although R0 = {r0} > 1")));
            }
            let mut lo = 0.0;
            let mut hi = self.params.bound_n2().max(h0);
            let mut tries = 0;
            while h(hi)? >= hi {
                lo = hi;
                hi *= 2.0;
                tries += 1;
                if tries > 60 {
                    return Err(Error::Bracket(format!("H(P) >= P up to P = {hi}")));
                }
            }
            let mut mid = 0.5 * (lo + hi);
            loop {
                let f = h(mid)? - mid;
                if f.abs() <= self.cfg.fp_tol {
                    break;
                }
                if f > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                let next = 0.5 * (lo + hi);
                if next == lo || next == hi {
                    break;
                }
                mid = next;
            }
            mid
        };
        let sol = self.solve_fkpp(p_star)?;
        let w_star = self.sedentary_profile(p_star, &sol.u);
        let fixed_point_residual = (self.settled_mass(p_star, &sol.u) - p_star).abs();
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        samples.dedup_by(|a, b| a.0 == b.0);
        Ok(EquilibriumReport {
            r0,
            trivial: false,
            p_star,
            u_star: sol.u,
            w_star,
            fkpp_residual: sol.residual,
            fixed_point_residual,
            h_samples: samples,
            uniqueness_verified,
        })
    }
}

pub fn solve_fkpp(params: &ModelParams, grid: &Discretization, p: f64) -> Result<SpatialField> {
    Ok(Equilibrium::new(params, grid, EquilibriumConfig::default())?.solve_fkpp(p)?.u)
}

pub fn h_map(params: &ModelParams, grid: &Discretization, p: f64) -> Result<f64> {
    Equilibrium::new(params, grid, EquilibriumConfig::default())?.h_map(p)
}

pub fn positive_equilibrium(params: &ModelParams, grid: &Discretization) -> Result<EquilibriumReport> {
    Equilibrium::new(params, grid, EquilibriumConfig::default())?.positive_equilibrium()
}
