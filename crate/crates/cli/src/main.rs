//! `hybridpop`: simulate, analyse and verify the disperser / sedentary model
//! described by a TOML config.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 a verification check failed.

mod config;
mod initial;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hybridpop::equilibrium::Equilibrium;
use hybridpop::rates::{audit_assumptions, ModelParams};
use hybridpop::solver::{AgeField, Solver};
use hybridpop::spectral::Spectral;
use hybridpop::verify::{run_suite, Check};
use hybridpop::{build_grid, Discretization};

use config::RunConfig;
use initial::{DisperserInit, SedentaryInit};
use output::{num, Output};

#[derive(Parser, Debug)]
#[command(name = "hybridpop", version, about = "Disperser / age-structured sedentary population model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the time stepper and write the population series and snapshots.
    Simulate(SimulateArgs),
    /// Reproduction number, principal eigenvalues and growth bound.
    R0(R0Args),
    /// Positive steady state.
    Equilibrium(EquilibriumArgs),
    /// Threshold-dynamics verification suite.
    Verify(VerifyArgs),
    /// Sampled checks of the monotonicity assumptions on the rates.
    Audit(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Also write gnuplot `.dat` files.
    #[arg(long)]
    plot: bool,
    #[arg(long)]
    n_x: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Allowed mass through the age horizon per step, relative to `P`.
    #[arg(long)]
    tail_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct SpectralArgs {
    #[arg(long)]
    eig_tol: Option<f64>,
    #[arg(long)]
    root_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    t_end: Option<f64>,
    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    output_times: Option<Vec<f64>>,
    /// `constant(v)`, `cosine-bump(amplitude, modes)`, `equilibrium(path)` or `eigenfunction(scale)`.
    #[arg(long)]
    u0: Option<String>,
    /// `constant(v)`, `exp-decay(rate[, amplitude])` or `file(path)`.
    #[arg(long)]
    w0: Option<String>,
    #[command(flatten)]
    spectral: SpectralArgs,
}

#[derive(Args, Debug)]
struct R0Args {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_negative_numbers = true)]
    k_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    k_max: Option<f64>,
    #[arg(long)]
    k_count: Option<usize>,
    #[command(flatten)]
    spectral: SpectralArgs,
}

#[derive(Args, Debug)]
struct EquilibriumArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    fp_tol: Option<f64>,
    #[arg(long)]
    fkpp_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated subset of extinction, persistence, bounds, comparison.
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    extinct_tol: Option<f64>,
    #[arg(long)]
    monotone_tol: Option<f64>,
    #[arg(long)]
    convergence_tol: Option<f64>,
    #[arg(long)]
    sandwich_gap: Option<f64>,
    #[arg(long)]
    order_tol: Option<f64>,
    #[arg(long)]
    bound_slack: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    comparison_steps: Option<usize>,
    /// Add a run from a heavier-than-exponential age profile.
    #[arg(long)]
    relax_age_bound: bool,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        set(&mut cfg.output.dir, self.out.clone());
        cfg.output.plot |= self.plot;
        set(&mut cfg.grid.n_x, self.n_x);
        set(&mut cfg.grid.dt, self.dt);
        set(&mut cfg.grid.tail_tol, self.tail_tol);
        Ok(cfg)
    }
}

impl SpectralArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.r0.eig_tol, self.eig_tol);
        set(&mut cfg.r0.root_tol, self.root_tol);
        set(&mut cfg.r0.max_iter, self.max_iter);
    }
}

/// Exit status carried alongside the error.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let numerical = error
            .chain()
            .any(|e| e.downcast_ref::<hybridpop::Error>().is_some_and(|e| e.is_numerical()));
        Self {
            code: if numerical { 2 } else { 1 },
            error,
        }
    }
}

impl From<hybridpop::Error> for Failure {
    fn from(e: hybridpop::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

struct Run {
    cfg: RunConfig,
    params: ModelParams,
    grid: Discretization,
    out: Output,
}

fn prepare(cfg: RunConfig, command: &str) -> Result<Run> {
    let params = cfg.model.build(cfg.grid.n_x).context("building model parameters")?;
    let grid = build_grid(&params, cfg.grid.n_x, cfg.grid.dt, cfg.grid.tail_tol).context("building grid")?;
    let out = Output::new(&cfg.output.dir, command, &cfg.hash(), cfg.output.plot)?;
    Ok(Run { cfg, params, grid, out })
}

fn x_rows(grid: &Discretization, values: &[f64]) -> Vec<Vec<f64>> {
    values.iter().enumerate().map(|(i, v)| vec![grid.x(i), *v]).collect()
}

fn xa_rows(grid: &Discretization, w: &AgeField) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(grid.n_x * grid.n_ages());
    for i in 0..grid.n_x {
        for j in 0..grid.n_ages() {
            rows.push(vec![grid.x(i), grid.age(j), w.get(i, j)]);
        }
    }
    rows
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let mut cfg = args.common.load()?;
    set(&mut cfg.simulate.t_end, args.t_end);
    set(&mut cfg.simulate.output_times, args.output_times);
    set(&mut cfg.simulate.u0, args.u0);
    set(&mut cfg.simulate.w0, args.w0);
    args.spectral.apply(&mut cfg);
    let u0: DisperserInit = cfg.simulate.u0.parse()?;
    let w0: SedentaryInit = cfg.simulate.w0.parse()?;
    let ctx = prepare(cfg, "simulate")?;
    let (p, g) = (&ctx.params, &ctx.grid);

    let u = initial::disperser(&u0, p, g, &ctx.cfg.r0)?;
    let w = initial::sedentary(&w0, g)?;
    let solver = Solver::new(p, g)?;
    let start = solver.initial_state(u, w)?;
    let traj = solver.simulate(&start, ctx.cfg.simulate.t_end, &ctx.cfg.simulate.output_times)?;

    let series: Vec<Vec<f64>> = (0..traj.times.len())
        .map(|i| vec![traj.times[i], traj.population[i], traj.u_max[i], traj.u_min[i]])
        .collect();
    ctx.out.csv("series", &[], &["t", "P", "max_u", "min_u"], &series)?;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let note = [format!("t = {}", num(snap.t))];
        ctx.out.csv(&format!("snapshot_{k:03}_u"), &note, &["x", "u"], &x_rows(g, &snap.u))?;
        ctx.out.csv(&format!("snapshot_{k:03}_w"), &note, &["x", "a", "w"], &xa_rows(g, &snap.w))?;
    }
    let last = &traj.final_state;
    println!(
        "t = {:.6}  P = {:.6e}  max u = {:.6e}  min u = {:.6e}  ({} steps, {} snapshots)",
        last.t,
        last.population,
        last.u.max(),
        last.u.min(),
        traj.times.len() - 1,
        traj.snapshots.len()
    );
    Ok(())
}

fn r0(args: R0Args) -> Result<(), Failure> {
    let mut cfg = args.common.load()?;
    set(&mut cfg.r0.k_min, args.k_min);
    set(&mut cfg.r0.k_max, args.k_max);
    set(&mut cfg.r0.k_count, args.k_count);
    args.spectral.apply(&mut cfg);
    let ctx = prepare(cfg, "r0")?;
    let (p, g) = (&ctx.params, &ctx.grid);
    let sp = Spectral::new(p, g, ctx.cfg.r0.spectral())?;
    let rep = sp.report(&ctx.cfg.r0.k_samples())?;

    let s_l0 = rep.s_l0.map_or("none".to_string(), num);
    ctx.out.text(
        "spectral.txt",
        &[
            ("r0", num(rep.r0)),
            ("lambda_hat_0", num(rep.lambda_hat_0)),
            ("s_l0", s_l0.clone()),
            ("iterations", rep.iterations.to_string()),
            ("residual", num(rep.residual)),
            ("n_x", g.n_x.to_string()),
            ("dt", num(g.dt)),
            ("age_horizon", num(g.horizon)),
        ],
    )?;
    ctx.out.csv("phi", &[], &["x", "phi"], &x_rows(g, &rep.phi))?;
    let samples: Vec<Vec<f64>> = rep.samples.iter().map(|(k, l)| vec![*k, *l]).collect();
    ctx.out.csv("lambda_hat", &[], &["k", "lambda_hat"], &samples)?;
    println!("R0 = {:.6}", rep.r0);
    println!("lambda_hat(0) = {:.6}", rep.lambda_hat_0);
    match rep.s_l0 {
        Some(s) => println!("s(L0) = {s:.6}"),
        None => println!("s(L0) = none (below -mu_lower)"),
    }
    Ok(())
}

fn equilibrium(args: EquilibriumArgs) -> Result<(), Failure> {
    let mut cfg = args.common.load()?;
    set(&mut cfg.equilibrium.fp_tol, args.fp_tol);
    set(&mut cfg.equilibrium.fkpp_tol, args.fkpp_tol);
    let ctx = prepare(cfg, "equilibrium")?;
    let (p, g) = (&ctx.params, &ctx.grid);
    let rep = Equilibrium::new(p, g, ctx.cfg.equilibrium.config())?.positive_equilibrium()?;

    ctx.out.text(
        "equilibrium.txt",
        &[
            ("r0", num(rep.r0)),
            ("trivial", rep.trivial.to_string()),
            ("p_star", num(rep.p_star)),
            ("u_star_max", num(rep.u_star.max())),
            ("u_star_min", num(rep.u_star.min())),
            ("fkpp_residual", num(rep.fkpp_residual)),
            ("fixed_point_residual", num(rep.fixed_point_residual)),
            ("uniqueness_verified", rep.uniqueness_verified.to_string()),
        ],
    )?;
    ctx.out.csv("u_star", &[], &["x", "u"], &x_rows(g, &rep.u_star))?;
    ctx.out.csv("w_star", &[], &["x", "a", "w"], &xa_rows(g, &rep.w_star))?;
    let h: Vec<Vec<f64>> = rep.h_samples.iter().map(|(a, b)| vec![*a, *b]).collect();
    ctx.out.csv("h_map", &[], &["P", "H"], &h)?;
    if rep.trivial {
        println!("R0 = {:.6} <= 1: only the trivial equilibrium", rep.r0);
    } else {
        println!("P* = {:.8}  max u* = {:.8}  min u* = {:.8}", rep.p_star, rep.u_star.max(), rep.u_star.min());
        if !rep.uniqueness_verified {
            println!("warning: uniqueness of P* could not be confirmed on the sampled range");
        }
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let mut cfg = args.common.load()?;
    let v = &mut cfg.verify;
    set(&mut v.checks, args.checks);
    set(&mut v.seed, args.seed);
    set(&mut v.extinct_tol, args.extinct_tol);
    set(&mut v.monotone_tol, args.monotone_tol);
    set(&mut v.convergence_tol, args.convergence_tol);
    set(&mut v.sandwich_gap, args.sandwich_gap);
    set(&mut v.order_tol, args.order_tol);
    set(&mut v.bound_slack, args.bound_slack);
    set(&mut v.t_max, args.t_max);
    set(&mut v.comparison_steps, args.comparison_steps);
    v.relax_age_bound |= args.relax_age_bound;
    let checks = cfg
        .verify
        .checks
        .iter()
        .map(|c| c.parse::<Check>())
        .collect::<hybridpop::Result<Vec<_>>>()
        .map_err(|e| Failure { code: 1, error: e.into() })?;
    let ctx = prepare(cfg, "verify")?;
    let verdicts = run_suite(&ctx.params, &ctx.grid, &checks, ctx.cfg.verify.seed, &ctx.cfg.verify.config())?;

    let rows: Vec<Vec<String>> = verdicts
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.status().to_string(),
                num(r.measured),
                num(r.expected),
                num(r.tolerance),
                r.notes.clone(),
            ]
        })
        .collect();
    ctx.out.records("verify_report", &["check", "status", "measured", "expected", "tolerance", "notes"], &rows)?;
    println!("{:<12} {:<6} {:>12} {:>10}  notes", "check", "status", "measured", "tolerance");
    for r in &verdicts {
        println!("{:<12} {:<6} {:>12.4e} {:>10.1e}  {}", r.name, r.status(), r.measured, r.tolerance, r.notes);
    }
    if verdicts.iter().any(|r| !r.skipped && !r.passed) {
        return Err(Failure {
            code: 3,
            error: anyhow::anyhow!("verification failed"),
        });
    }
    Ok(())
}

fn audit(args: Common) -> Result<(), Failure> {
    let ctx = prepare(args.load()?, "audit")?;
    let report = audit_assumptions(&ctx.params, &ctx.grid);
    let text = report.to_string();
    let entries: Vec<(&str, String)> = report
        .checks()
        .iter()
        .map(|c| (c.name, if c.holds { "holds".to_string() } else { "fails".to_string() }))
        .collect();
    ctx.out.text("audit.txt", &entries)?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::R0(a) => r0(a),
        Command::Equilibrium(a) => equilibrium(a),
        Command::Verify(a) => verify(a),
        Command::Audit(a) => audit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
