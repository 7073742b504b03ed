mod common;

use common::*;
use finsler_dp::thresholds::{
    estimate_kappa, estimate_kappa_from, find_smax, kappa_starts, lambda_capital, lambda_scan, KappaOptions,
    LambdaParams,
};

fn default_params(kappa: f64) -> LambdaParams {
    LambdaParams::new(kappa, 1.0, &default_g(), 0.5, 2.0, 6.0, 1.0)
}

/// Sharp constant for ‖u‖₆ ≤ C‖∇u‖₂ on ℝ³: C = 3^{-1/2} (π/2)^{-2/3}.
fn talenti_3d() -> f64 {
    3f64.powf(-0.5) * (std::f64::consts::PI / 2.0).powf(-2.0 / 3.0)
}

#[test]
fn kappa_is_below_talenti_and_grows_under_refinement() {
    let opts = KappaOptions::default();
    let mut last = 0.0;
    for n in [2, 4, 8] {
        let t = std::time::Instant::now();
        let est = estimate_kappa(&cube(n), euclidean().as_ref(), 2.0, 6.0, &opts).unwrap();
        eprintln!("{n}: kappa = {} converged = {} its = {} start = {} in {:?}", est.value, est.converged, est.iterations, est.best_start, t.elapsed());
        assert!(est.value <= talenti_3d());
        assert!(est.value >= last);
        last = est.value;
    }
}

#[test]
fn kappa_is_invariant_under_start_scaling() {
    let mesh = cube(4);
    let opts = KappaOptions { random_starts: 3, ..KappaOptions::default() };
    let starts = kappa_starts(&mesh, &opts);
    let scaled: Vec<Vec<f64>> = starts.iter().map(|s| s.iter().map(|v| 100.0 * v).collect()).collect();
    let a = estimate_kappa_from(&mesh, euclidean().as_ref(), 2.0, 6.0, &starts, &opts).unwrap();
    let b = estimate_kappa_from(&mesh, euclidean().as_ref(), 2.0, 6.0, &scaled, &opts).unwrap();
    assert!((a.value - b.value).abs() <= 1e-10 * a.value);
}

/// Maximizer of Λ over a log grid of `n` points on [1e-8, 1e8], refined by
/// the vertex of the parabola through the best sample and its neighbours.
fn dense_grid_smax(lp: &LambdaParams, n: usize) -> f64 {
    let t = |i: usize| -8.0 * std::f64::consts::LN_10 + 16.0 * std::f64::consts::LN_10 * i as f64 / (n - 1) as f64;
    let f = |i: usize| lambda_capital(t(i).exp(), lp).unwrap();
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..n {
        let v = f(i);
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    let (a, b, c) = (f(best - 1), best_v, f(best + 1));
    let h = t(1) - t(0);
    (t(best) + 0.5 * h * (a - c) / (a - 2.0 * b + c)).exp()
}

#[test]
fn smax_matches_dense_grid_oracle() {
    for kappa in [0.3, 0.375, 0.45] {
        let lp = default_params(kappa);
        let sm = find_smax(&lp).unwrap();
        let oracle = dense_grid_smax(&lp, 1_000_000);
        assert!((sm.s_max - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", sm.s_max);
        assert!(sm.lambda_at_smax > 0.0);
    }
}

#[test]
fn lambda_is_unimodal_near_smax() {
    let lp = default_params(0.375);
    let sm = find_smax(&lp).unwrap();
    let sample = |a: f64, b: f64| -> Vec<f64> {
        (0..100).map(|i| lambda_capital(a + (b - a) * i as f64 / 99.0, &lp).unwrap()).collect()
    };
    let up = sample(sm.s_max / 2.0, sm.s_max);
    let down = sample(sm.s_max, 2.0 * sm.s_max);
    assert!(up.windows(2).all(|w| w[1] >= w[0]));
    assert!(down.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn scaling_growth_constants_scales_lambda() {
    let lp = default_params(0.375);
    let big = LambdaParams { c1: 10.0, c2: 10.0, ..lp };
    let (a, b) = (find_smax(&lp).unwrap(), find_smax(&big).unwrap());
    assert!((a.s_max - b.s_max).abs() <= 1e-8 * a.s_max);
    assert!((a.lambda_at_smax / 10.0 - b.lambda_at_smax).abs() <= 1e-12 * a.lambda_at_smax);
}

#[test]
fn lambda_sign_structure() {
    let lp = default_params(0.375);
    let scan = lambda_scan(&lp, 20).unwrap();
    let first_pos = scan.iter().position(|(_, v)| *v > 0.0).unwrap();
    let last_pos = scan.iter().rposition(|(_, v)| *v > 0.0).unwrap();
    assert!(scan[first_pos..=last_pos].iter().all(|(_, v)| *v > 0.0));
    assert!(scan[last_pos + 1..].iter().all(|(_, v)| *v < 0.0));
    assert!(lambda_capital(1e3, &lp).unwrap() < 0.0);
    // near zero the constant singular term dominates the numerator
    assert!(scan[0].1 < 0.0);
}
