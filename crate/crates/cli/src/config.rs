use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hybridpop::equilibrium::EquilibriumConfig;
use hybridpop::grid::DEFAULT_TAIL_TOL;
use hybridpop::rates::ModelSpec;
use hybridpop::spectral::SpectralConfig;
use hybridpop::verify::VerifyConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything a run needs. Every table except `model` may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub r0: R0Config,
    #[serde(default)]
    pub equilibrium: EquilibriumSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_x: usize,
    pub dt: f64,
    pub tail_tol: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_x: 65,
            dt: 0.02,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub t_end: f64,
    pub output_times: Vec<f64>,
    /// See [`crate::initial`] for the spellings.
    pub u0: String,
    pub w0: String,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            output_times: Vec::new(),
            u0: "constant(1)".into(),
            w0: "exp-decay(1)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct R0Config {
    pub k_min: f64,
    pub k_max: f64,
    /// Number of `lambda_hat(k)` samples; 0 skips the sweep.
    pub k_count: usize,
    pub eig_tol: f64,
    pub root_tol: f64,
    pub max_iter: usize,
}

impl Default for R0Config {
    fn default() -> Self {
        let s = SpectralConfig::default();
        Self {
            k_min: 0.0,
            k_max: 2.0,
            k_count: 21,
            eig_tol: s.eig_tol,
            root_tol: s.root_tol,
            max_iter: s.max_iter,
        }
    }
}

impl R0Config {
    pub fn spectral(&self) -> SpectralConfig {
        SpectralConfig {
            eig_tol: self.eig_tol,
            max_iter: self.max_iter,
            root_tol: self.root_tol,
        }
    }

    pub fn k_samples(&self) -> Vec<f64> {
        match self.k_count {
            0 => Vec::new(),
            1 => vec![self.k_min],
            n => (0..n)
                .map(|i| self.k_min + (self.k_max - self.k_min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumSection {
    pub fp_tol: f64,
    pub fkpp_tol: f64,
}

impl Default for EquilibriumSection {
    fn default() -> Self {
        let e = EquilibriumConfig::default();
        Self {
            fp_tol: e.fp_tol,
            fkpp_tol: e.fkpp_tol,
        }
    }
}

impl EquilibriumSection {
    pub fn config(&self) -> EquilibriumConfig {
        EquilibriumConfig {
            fp_tol: self.fp_tol,
            fkpp_tol: self.fkpp_tol,
            ..EquilibriumConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub checks: Vec<String>,
    pub seed: u64,
    pub extinct_tol: f64,
    pub monotone_tol: f64,
    pub convergence_tol: f64,
    pub sandwich_gap: f64,
    pub order_tol: f64,
    pub bound_slack: f64,
    pub t_max: f64,
    pub bounds_t_end: f64,
    pub comparison_steps: usize,
    pub relax_age_bound: bool,
}

impl Default for VerifySection {
    fn default() -> Self {
        let v = VerifyConfig::default();
        Self {
            checks: vec!["extinction".into(), "persistence".into(), "bounds".into(), "comparison".into()],
            seed: 0,
            extinct_tol: v.extinct_tol,
            monotone_tol: v.monotone_tol,
            convergence_tol: v.convergence_tol,
            sandwich_gap: v.sandwich_gap,
            order_tol: v.order_tol,
            bound_slack: v.bound_slack,
            t_max: v.t_max,
            bounds_t_end: v.bounds_t_end,
            comparison_steps: v.comparison_steps,
            relax_age_bound: v.relax_age_bound,
        }
    }
}

impl VerifySection {
    pub fn config(&self) -> VerifyConfig {
        VerifyConfig {
            extinct_tol: self.extinct_tol,
            monotone_tol: self.monotone_tol,
            convergence_tol: self.convergence_tol,
            sandwich_gap: self.sandwich_gap,
            t_max: self.t_max,
            bound_slack: self.bound_slack,
            comparison_steps: self.comparison_steps,
            order_tol: self.order_tol,
            bounds_t_end: self.bounds_t_end,
            relax_age_bound: self.relax_age_bound,
            ..VerifyConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub plot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            plot: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // relative paths inside the config are relative to the config file
        if let Some(base) = path.parent() {
            if cfg.output.dir.is_relative() {
                cfg.output.dir = base.join(&cfg.output.dir);
            }
            cfg.simulate.u0 = crate::initial::rebase(&cfg.simulate.u0, base);
            cfg.simulate.w0 = crate::initial::rebase(&cfg.simulate.w0, base);
        }
        Ok(cfg)
    }

    /// Hex SHA-256 of the resolved config, written into every output file.
    /// Where the files go does not enter the hash.
    pub fn hash(&self) -> String {
        let mut resolved = self.clone();
        resolved.output = OutputConfig::default();
        let text = toml::to_string(&resolved).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
