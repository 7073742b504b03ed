mod common;

use common::*;
use finsler_dp::energy::energy_j;
use finsler_dp::fespace::{w1p0f_norm, FeFunction};
use finsler_dp::solver::{initial_guess, minimize, project_to_ball, verify, SolverConfig, VerifyThresholds};
use proptest::prelude::*;

#[test]
fn projection_examples() {
    let mesh = cube(3);
    let norm = randers();
    let u = random_function(&mesh, &mut rng(1), -1.0, 1.0);
    let n = w1p0f_norm(&u, norm.as_ref(), 2.0);
    let same = project_to_ball(&u, 2.0 * n, norm.as_ref(), 2.0);
    assert_eq!(same.coefficients(), u.coefficients());
    let half = project_to_ball(&u, n / 2.0, norm.as_ref(), 2.0);
    assert!((w1p0f_norm(&half, norm.as_ref(), 2.0) - n / 2.0).abs() <= 1e-12 * n);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent(seed in 0u64..10_000, sigma in 1e-3f64..10.0) {
        let mesh = cube(3);
        let norm = randers();
        let u = random_function(&mesh, &mut rng(seed), -2.0, 2.0);
        let once = project_to_ball(&u, sigma, norm.as_ref(), 2.0);
        let twice = project_to_ball(&once, sigma, norm.as_ref(), 2.0);
        prop_assert!(w1p0f_norm(&once, norm.as_ref(), 2.0) <= sigma * (1.0 + 1e-12));
        for (a, b) in once.coefficients().iter().zip(twice.coefficients()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }
}

#[test]
fn initial_guess_has_negative_energy_and_respects_the_ball() {
    let mesh = cube(4);
    let spec = default_spec(&mesh, euclidean(), 1.0);
    let cfg = SolverConfig::default();
    let g = initial_guess(&spec, &cfg, 1.0).unwrap();
    assert!(g.energy < 0.0 && g.warning.is_none());
    let tiny = initial_guess(&spec, &cfg, 1e-8).unwrap();
    assert!(w1p0f_norm(&tiny.u, spec.norm.as_ref(), 2.0) <= 1e-8 * (1.0 + 1e-12));
    let no_g = initial_guess(&spec.with_lambda(0.0), &cfg, 1.0).unwrap();
    assert!(no_g.energy < 0.0);
}

#[test]
fn one_vertex_minimizer_matches_scalar_root() {
    let mesh = cube(2);
    let spec = default_spec(&mesh, euclidean(), 1.0);
    let t = ScalarOracle::new(&spec).root(&spec);
    let r = minimize(&spec, &SolverConfig::default(), 2.0).unwrap();
    assert!(r.converged, "{:?}", r.diagnostics);
    let got = r.solution.interior_values()[0];
    assert!((got - t).abs() <= 1e-8 * t, "{got} vs {t}");
    assert!(r.verification.weak_residual_max <= 1e-10);
    assert!(r.verification.nehari_residual <= 1e-10);
}

#[test]
fn solves_without_the_g_term() {
    let mesh = cube(4);
    let spec = default_spec(&mesh, euclidean(), 0.0);
    let r = minimize(&spec, &SolverConfig::default(), 1.0).unwrap();
    assert!(r.converged && r.verification.passed, "{:?}", r.verification);
    assert!(r.min_interior > 0.0 && r.energy.total < 0.0);
}

#[test]
fn runs_are_deterministic_and_monotone() {
    let mesh = cube(4);
    let spec = default_spec(&mesh, randers(), 0.5);
    let sigma = 1.0;
    let a = minimize(&spec, &SolverConfig::default(), sigma).unwrap();
    let b = minimize(&spec, &SolverConfig::default(), sigma).unwrap();
    assert!(a.converged && a.verification.passed, "{:?} {:?}", a.diagnostics, a.verification);
    let its = |r: &finsler_dp::solver::SolveReport| r.stages.iter().map(|s| s.iterations).collect::<Vec<_>>();
    assert_eq!(its(&a), its(&b));
    assert!((a.energy.total - b.energy.total).abs() <= 1e-14 * a.energy.total.abs());
    // energy never increases within a stage beyond evaluation rounding
    for w in a.trace.windows(2) {
        if w[0].epsilon == w[1].epsilon {
            assert!(w[1].energy <= w[0].energy + 1e-13 * w[0].energy.abs(), "{:?}", w);
        }
    }
    assert!(a.norm <= sigma * (1.0 + 1e-12));
}

#[test]
fn feasibility_when_the_ball_is_active() {
    let mesh = cube(4);
    let spec = default_spec(&mesh, euclidean(), 1.0);
    let sigma = 0.05;
    let r = minimize(&spec, &SolverConfig::default(), sigma).unwrap();
    assert!(r.norm <= sigma * (1.0 + 1e-12));
    // the unconstrained minimizer lies outside, so the interiority check fails
    assert!(!r.verification.checks.iter().find(|c| c.name == "strict_interiority").unwrap().passed);
}

#[test]
fn verification_rejects_trivial_and_boundary_points() {
    let mesh = cube(4);
    let spec = default_spec(&mesh, euclidean(), 1.0);
    let zero = FeFunction::zeros(mesh.clone());
    let v = verify(&zero, &spec, 1.0, &VerifyThresholds::default());
    assert!(!v.passed);
    assert!(!v.checks.iter().find(|c| c.name == "negative_energy").unwrap().passed);
    let r = minimize(&spec, &SolverConfig::default(), 1.0).unwrap();
    assert!(r.verification.passed);
    let on_sphere = r.solution.scaled(1.0 / r.norm);
    let v = verify(&on_sphere, &spec, 1.0, &VerifyThresholds::default());
    let c = v.checks.iter().find(|c| c.name == "strict_interiority").unwrap();
    assert!((c.value - 1.0).abs() < 1e-12 && !c.passed);
}

#[test]
fn epsilon_continuation_is_monotone() {
    let mesh = cube(3);
    let spec = default_spec(&mesh, euclidean(), 1.0);
    let mut r = rng(17);
    for _ in 0..50 {
        let u = random_function(&mesh, &mut r, 0.0, 1.0);
        let mut last = f64::NEG_INFINITY;
        for eps in [0.0, 1e-12, 1e-8, 1e-4, 1e-2, 1e-1] {
            let j = energy_j(&u, &spec, eps).unwrap().total;
            assert!(j >= last);
            last = j;
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = SolverConfig::default();
    cfg.epsilon_schedule = vec![1e-2, 1e-1];
    assert!(cfg.validate().is_err());
    let mut cfg = SolverConfig::default();
    cfg.sigma = Some(-1.0);
    assert!(cfg.validate().is_err());
}
