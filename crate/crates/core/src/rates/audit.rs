//! Sampled checks of the monotonicity hypotheses on the vital rates.

use std::fmt;

use crate::grid::Discretization;
use crate::kernel;
use crate::rates::ModelParams;

/// Sample points for the audit. The density range defaults to `10 * N1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeLattice {
    pub n_space: usize,
    pub n_age: usize,
    pub n_density: usize,
    pub p_max: Option<f64>,
}

impl Default for ProbeLattice {
    fn default() -> Self {
        Self {
            n_space: 33,
            n_age: 33,
            n_density: 17,
            p_max: None,
        }
    }
}

impl ProbeLattice {
    /// Up to `n_space` node indices spread evenly over `0..n`, ends included.
    pub fn space_nodes(&self, n: usize) -> impl Iterator<Item = usize> {
        let k = self.n_space.min(n).max(2);
        let mut nodes: Vec<usize> = (0..k)
            .map(|i| ((i as f64) * (n - 1) as f64 / (k - 1) as f64).round() as usize)
            .collect();
        nodes.dedup();
        nodes.into_iter()
    }

    pub fn ages(&self, horizon: f64) -> impl Iterator<Item = f64> {
        evenly(horizon, self.n_age)
    }

    pub fn densities(&self, p_max: f64) -> impl Iterator<Item = f64> {
        evenly(p_max, self.n_density)
    }
}

fn evenly(top: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| top * i as f64 / (n - 1) as f64)
}

/// Outcome of one sampled monotonicity check.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub holds: bool,
    /// Holds only because the sampled quantity never changed.
    pub weakly_monotone: bool,
    /// First violating sample.
    pub violation: Option<String>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// Recruitment integral increasing in the sedentary density.
    pub a4_i: AssumptionCheck,
    /// `gamma w - mu(P) w` increasing for some finite `gamma`.
    pub a4_ii: AssumptionCheck,
    /// `chi` increasing in `P`.
    pub a4_iii: AssumptionCheck,
    /// `beta` decreasing, `mu` increasing, `chi` decreasing in `P`.
    pub a6: AssumptionCheck,
    /// Lifetime reproduction and settled lifetime decreasing in `P`.
    pub a7: AssumptionCheck,
}

impl AssumptionReport {
    pub fn a4(&self) -> bool {
        self.a4_i.holds && self.a4_ii.holds && self.a4_iii.holds
    }

    pub fn checks(&self) -> [&AssumptionCheck; 5] {
        [&self.a4_i, &self.a4_ii, &self.a4_iii, &self.a6, &self.a7]
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.checks() {
            let verdict = match (c.holds, c.weakly_monotone) {
                (true, true) => "holds (weakly monotone)",
                (true, false) => "holds",
                (false, _) => "fails",
            };
            write!(f, "{:<7} {verdict}", c.name)?;
            if let Some(v) = &c.violation {
                write!(f, "; first violation: {v}")?;
            }
            if !c.note.is_empty() {
                write!(f, " [{}]", c.note)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Round-off allowance for finite-difference sign checks.
const REL_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    Up,
    Down,
}

/// Tracks a family of sequences that must be monotone in one direction.
struct Monotone {
    dir: Direction,
    changed: bool,
    violation: Option<String>,
}

impl Monotone {
    fn new(dir: Direction) -> Self {
        Self {
            dir,
            changed: false,
            violation: None,
        }
    }

    fn step(&mut self, prev: f64, next: f64, at: impl FnOnce() -> String) {
        let diff = next - prev;
        let slack = REL_SLACK * prev.abs().max(next.abs());
        if diff.abs() > slack {
            self.changed = true;
        }
        let bad = match self.dir {
            Direction::Up => diff < -slack,
            Direction::Down => diff > slack,
        };
        if bad && self.violation.is_none() {
            self.violation = Some(at());
        }
    }

    fn finish(self, name: &'static str, note: String) -> AssumptionCheck {
        AssumptionCheck {
            name,
            holds: self.violation.is_none(),
            weakly_monotone: self.violation.is_none() && !self.changed,
            violation: self.violation,
            note,
        }
    }
}

/// Samples each hypothesis on the default lattice.
pub fn audit_assumptions(params: &ModelParams, grid: &Discretization) -> AssumptionReport {
    audit_with(params, grid, &ProbeLattice::default())
}

pub fn audit_with(params: &ModelParams, grid: &Discretization, lattice: &ProbeLattice) -> AssumptionReport {
    let p_max = lattice.p_max.unwrap_or_else(|| 10.0 * params.bound_n1());
    let p_max = if p_max > 0.0 { p_max } else { 1.0 };
    let nodes: Vec<usize> = lattice.space_nodes(params.n_x()).collect();
    let ages: Vec<f64> = lattice.ages(grid.horizon).collect();
    let densities: Vec<f64> = lattice.densities(p_max).collect();

    AssumptionReport {
        a4_i: audit_recruitment(params, grid, &nodes, p_max, lattice.n_density),
        a4_ii: audit_mortality_gamma(params, &nodes, &ages, &densities),
        a4_iii: audit_in_p("A4(iii)", Direction::Up, &nodes, &densities, |x, p| params.chi.eval(x, 0.0, p)),
        a6: audit_a6(params, &nodes, &ages, &densities),
        a7: audit_a7(params, grid, &nodes, &densities),
    }
}

/// Test densities `s * f(a)`, uniform in space, with `s` scaled so that the
/// population `P = s L int f` sweeps `[0, p_max]`.
fn audit_recruitment(
    params: &ModelParams,
    grid: &Discretization,
    nodes: &[usize],
    p_max: f64,
    n_scale: usize,
) -> AssumptionCheck {
    let lower = params.mu_lower;
    let shapes: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
        ("1", Box::new(|_| 1.0)),
        ("exp(-mu a)", Box::new(move |a: f64| (-lower * a).exp())),
        ("a exp(-mu a)", Box::new(move |a: f64| a * (-lower * a).exp())),
    ];
    let weights = grid.age_weights();
    let ages: Vec<f64> = (0..grid.n_ages()).map(|j| grid.age(j)).collect();
    let mut check = Monotone::new(Direction::Up);
    for (label, shape) in &shapes {
        let f: Vec<f64> = ages.iter().map(|&a| shape(a)).collect();
        let mass = grid.length * kernel::dot(&weights, &f);
        if mass <= 0.0 {
            continue;
        }
        for &x in nodes {
            let recruitment = |p: f64| {
                let s = p / mass;
                (0..ages.len())
                    .map(|j| weights[j] * params.beta.eval(x, ages[j], p) * s * f[j])
                    .sum::<f64>()
            };
            let mut prev_p = 0.0;
            let mut prev = recruitment(0.0);
            for p in evenly(p_max, n_scale).skip(1) {
                let next = recruitment(p);
                check.step(prev, next, || {
                    format!("w = s*{label}, x node {x}, P {prev_p:.4} -> {p:.4}: {prev:.6e} -> {next:.6e}")
                });
                prev = next;
                prev_p = p;
            }
        }
    }
    check.finish("A4(i)", String::new())
}

/// Smallest `gamma` making `P -> gamma P - mu(P) P` nondecreasing on the
/// lattice; the check holds whenever it is finite.
fn audit_mortality_gamma(params: &ModelParams, nodes: &[usize], ages: &[f64], densities: &[f64]) -> AssumptionCheck {
    let mut gamma = 0.0_f64;
    for &x in nodes {
        for &a in ages {
            for w in densities.windows(2) {
                let (p0, p1) = (w[0], w[1]);
                let slope = (params.mu.eval(x, a, p1) * p1 - params.mu.eval(x, a, p0) * p0) / (p1 - p0);
                gamma = gamma.max(slope);
            }
        }
    }
    let holds = gamma.is_finite();
    AssumptionCheck {
        name: "A4(ii)",
        holds,
        weakly_monotone: false,
        violation: (!holds).then(|| "unbounded mortality slope".to_string()),
        note: format!("gamma = {gamma:.6e}"),
    }
}

fn audit_in_p(
    name: &'static str,
    dir: Direction,
    nodes: &[usize],
    densities: &[f64],
    f: impl Fn(usize, f64) -> f64,
) -> AssumptionCheck {
    let mut check = Monotone::new(dir);
    for &x in nodes {
        for w in densities.windows(2) {
            let (a, b) = (f(x, w[0]), f(x, w[1]));
            check.step(a, b, || format!("x node {x}, P {:.4} -> {:.4}: {a:.6e} -> {b:.6e}", w[0], w[1]));
        }
    }
    check.finish(name, String::new())
}

fn audit_a6(params: &ModelParams, nodes: &[usize], ages: &[f64], densities: &[f64]) -> AssumptionCheck {
    let mut check = Monotone::new(Direction::Down);
    let mut mu_check = Monotone::new(Direction::Up);
    for &x in nodes {
        for &a in ages {
            for w in densities.windows(2) {
                let (b0, b1) = (params.beta.eval(x, a, w[0]), params.beta.eval(x, a, w[1]));
                check.step(b0, b1, || format!("beta at x node {x}, a {a:.4}, P {:.4} -> {:.4}", w[0], w[1]));
                let (m0, m1) = (params.mu.eval(x, a, w[0]), params.mu.eval(x, a, w[1]));
                mu_check.step(m0, m1, || format!("mu at x node {x}, a {a:.4}, P {:.4} -> {:.4}", w[0], w[1]));
            }
        }
        for w in densities.windows(2) {
            let (c0, c1) = (params.chi.eval(x, 0.0, w[0]), params.chi.eval(x, 0.0, w[1]));
            check.step(c0, c1, || format!("chi at x node {x}, P {:.4} -> {:.4}", w[0], w[1]));
        }
    }
    let changed = check.changed || mu_check.changed;
    let violation = check.violation.or(mu_check.violation);
    AssumptionCheck {
        name: "A6",
        holds: violation.is_none(),
        weakly_monotone: violation.is_none() && !changed,
        violation,
        note: String::new(),
    }
}

/// Uses the scheme's discrete survival so the verdict matches the
/// equilibrium solver's fixed-point map.
fn audit_a7(params: &ModelParams, grid: &Discretization, nodes: &[usize], densities: &[f64]) -> AssumptionCheck {
    let mut check = Monotone::new(Direction::Down);
    for &x in nodes {
        let values: Vec<(f64, f64)> = densities
            .iter()
            .map(|&p| {
                let chi = params.chi.eval(x, 0.0, p);
                (
                    chi * kernel::reproduction_integral(params, grid, x, p, 0.0),
                    chi * kernel::survival_integral(params, grid, x, p),
                )
            })
            .collect();
        for (i, w) in values.windows(2).enumerate() {
            let (p0, p1) = (densities[i], densities[i + 1]);
            check.step(w[0].0, w[1].0, || format!("lifetime reproduction at x node {x}, P {p0:.4} -> {p1:.4}"));
            check.step(w[0].1, w[1].1, || format!("settled lifetime at x node {x}, P {p0:.4} -> {p1:.4}"));
        }
    }
    check.finish("A7", String::new())
}
