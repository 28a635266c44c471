use hybridpop::equilibrium::positive_equilibrium;
use hybridpop::rates::{DensityResponse, ModelParams, ModelSpec, SpatialField};
use hybridpop::solver::{AgeField, PopulationState, Solver};
use hybridpop::spectral::{spectral_report, Spectral, SpectralConfig};
use hybridpop::verify::{
    build_super_sub, check_bounds, check_comparison, check_comparison_pair, check_extinction,
    check_persistence_and_convergence, check_positivity, run_suite, sandwich_verdict, Check, SuperSubPair,
    VerifyConfig,
};
use hybridpop::{build_grid, Discretization, Error};

fn bench(beta0: f64, density: DensityResponse, n_x: usize, dt: f64) -> (ModelParams, Discretization) {
    let p = ModelSpec::constant_benchmark(beta0, density).build(n_x).unwrap();
    let g = build_grid(&p, n_x, dt, 1e-8).unwrap();
    (p, g)
}

const SAT: DensityResponse = DensityResponse::Saturating { half: 1.0 };

#[test]
fn near_critical_extinction_needs_the_longer_horizon() {
    let (p, g) = bench(1.9, DensityResponse::Constant, 9, 0.05);
    let lam = Spectral::new(&p, &g, SpectralConfig::default()).unwrap().lambda_hat(0.0).unwrap();
    assert!((lam + 0.1).abs() < 1e-3, "{lam}");
    let v = check_extinction(&p, &g, &VerifyConfig::default()).unwrap();
    assert!(v.passed, "{v:?}");
    assert!(v.notes.contains("t_end = 50"), "{}", v.notes);
}

#[test]
fn extinction_refuses_supercritical_parameters() {
    let (p, g) = bench(6.0, SAT, 9, 0.05);
    assert!(matches!(
        check_extinction(&p, &g, &VerifyConfig::default()),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn sandwich_started_at_the_equilibrium_collapses_at_once() {
    let (p, g) = bench(6.0, SAT, 17, 0.05);
    let eq = positive_equilibrium(&p, &g).unwrap();
    let s = eq.state(&p, &g).unwrap();
    let pair = SuperSubPair {
        upper: s.clone(),
        lower: s,
        m1: 1.0,
        m2: 1.0,
        epsilon: 1.0,
    };
    let v = sandwich_verdict(&p, &g, &pair, &eq, &VerifyConfig::default()).unwrap();
    assert!(v.passed, "{v:?}");
    assert!(v.notes.contains("steps = 0"), "{}", v.notes);
}

#[test]
fn persistence_verdict_is_stable_under_refinement() {
    for n in [17, 129] {
        let (p, g) = bench(6.0, SAT, n, 0.05);
        let v = check_persistence_and_convergence(&p, &g, &VerifyConfig::default()).unwrap();
        assert!(v.passed, "n_x = {n}: {v:?}");
    }
}

#[test]
fn heavy_tailed_start_also_converges_when_relaxed() {
    let (p, g) = bench(6.0, SAT, 17, 0.05);
    let cfg = VerifyConfig {
        relax_age_bound: true,
        ..VerifyConfig::default()
    };
    let v = check_persistence_and_convergence(&p, &g, &cfg).unwrap();
    assert!(v.passed, "{v:?}");
    assert!(v.notes.contains("heavy-tailed"), "{}", v.notes);
}

#[test]
fn upper_and_lower_are_ordered_against_the_equilibrium() {
    let (p, g) = bench(6.0, SAT, 17, 0.05);
    let rep = spectral_report(&p, &g, &[]).unwrap();
    let pair = build_super_sub(&p, &g, &rep, &VerifyConfig::default()).unwrap();
    let eq = positive_equilibrium(&p, &g).unwrap();
    assert!(pair.upper.u.iter().zip(eq.u_star.iter()).all(|(a, b)| a >= b));
    assert!(pair.lower.u.iter().zip(eq.u_star.iter()).all(|(a, b)| a <= b));
}

#[test]
fn large_start_exceeds_bound_only_transiently() {
    let (p, g) = bench(6.0, SAT, 17, 0.05);
    let s = Solver::new(&p, &g).unwrap();
    let init = s
        .initial_state(SpatialField::constant(g.n_x, 100.0), AgeField::from_fn(&g, |_, a| (-a).exp()))
        .unwrap();
    let tr = s.simulate(&init, 40.0, &[]).unwrap();
    assert!(tr.u_max[0] > p.bound_n1());
    let v = check_bounds(&p, &tr, &VerifyConfig::default());
    assert!(v.passed, "{v:?}");
}

#[test]
fn benchmark_pair_stays_ordered_for_ten_thousand_steps() {
    let (p, g) = bench(6.0, DensityResponse::Constant, 9, 0.05);
    let v = check_comparison(&p, &g, 42, &VerifyConfig::default()).unwrap();
    assert!(v.passed, "{v:?}");
    assert!(v.notes.starts_with("10000 steps"));
}

#[test]
fn zero_lower_state_reduces_to_positivity() {
    let (p, g) = bench(6.0, DensityResponse::Constant, 9, 0.05);
    let s = Solver::new(&p, &g).unwrap();
    let hi = s
        .initial_state(SpatialField::constant(g.n_x, 2.0), AgeField::from_fn(&g, |_, a| (-2.0 * a).exp()))
        .unwrap();
    let cfg = VerifyConfig {
        comparison_steps: 500,
        ..VerifyConfig::default()
    };
    let cmp = check_comparison_pair(&p, &g, &PopulationState::zero(&p, &g), &hi, &cfg).unwrap();
    let pos = check_positivity(&p, &g, &hi, 500, &cfg).unwrap();
    assert!(cmp.passed && pos.passed);
}

#[test]
fn suite_on_both_benchmarks() {
    let cfg = VerifyConfig::default();
    let (p1, g1) = bench(1.0, DensityResponse::Constant, 17, 0.05);
    let low = run_suite(&p1, &g1, &Check::ALL, 1, &cfg).unwrap();
    let (p6, g6) = bench(6.0, SAT, 17, 0.05);
    let high = run_suite(&p6, &g6, &Check::ALL, 1, &cfg).unwrap();

    let by_name = |v: &[hybridpop::verify::VerdictReport], n: &str| v.iter().find(|r| r.name == n).unwrap().clone();
    assert!(by_name(&low, "extinction").passed);
    let skipped = by_name(&low, "persistence");
    assert!(skipped.skipped && skipped.notes.contains("R0"), "{skipped:?}");
    assert!(by_name(&high, "persistence").passed);
    assert!(by_name(&high, "bounds").passed);
    assert!(by_name(&high, "extinction").skipped);
    for r in low.iter().chain(&high) {
        assert!(r.skipped || r.passed, "{r:?}");
    }
    assert!(by_name(&low, "comparison").passed);
}

#[test]
fn suite_is_deterministic() {
    let (p, g) = bench(6.0, DensityResponse::Constant, 9, 0.05);
    let cfg = VerifyConfig {
        comparison_steps: 300,
        bounds_t_end: 10.0,
        ..VerifyConfig::default()
    };
    let a = run_suite(&p, &g, &[Check::Comparison, Check::Bounds], 9, &cfg).unwrap();
    let b = run_suite(&p, &g, &[Check::Comparison, Check::Bounds], 9, &cfg).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}
