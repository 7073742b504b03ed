//! Double phase modulars ρ_H, ρ_{H,F} and the Luxemburg norms they induce.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fespace::{BoxMesh, FeFunction, QuadratureRule};
use crate::minkowski::MinkowskiNorm;
use crate::par::{map_indexed, pairwise_sum};

/// Whether hypothesis violations are errors or warnings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Strict,
    Relaxed,
}

/// Exponents p < q with the critical exponent p* = Np/(N−p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublePhaseExponents {
    pub p: f64,
    pub q: f64,
    pub dim: usize,
    pub p_star: f64,
}

impl DoublePhaseExponents {
    /// Strict mode requires 2 ≤ p < q < N and q/p < 1 + 1/N. Relaxed mode
    /// accepts 1 < p < q < p* with p < N and returns the violated
    /// conditions as warnings.
    pub fn new(p: f64, q: f64, dim: usize, mode: Mode) -> Result<(Self, Vec<String>)> {
        let n = dim as f64;
        if !(p > 1.0) || !(q > p) || !p.is_finite() || !q.is_finite() {
            return Err(Error::Config(format!("exponents need 1 < p < q, got p = {p}, q = {q}")));
        }
        if !(p < n) {
            return Err(Error::Config(format!("p = {p} must be below N = {dim} for p* to be finite")));
        }
        let p_star = n * p / (n - p);
        if !(p_star > q) {
            return Err(Error::Config(format!("p* = {p_star} must exceed q = {q}")));
        }
        let mut violations = Vec::new();
        if !(2.0 <= p && q < n) {
            violations.push(format!("(H)(i) 2 <= p < q < N fails for p = {p}, q = {q}, N = {dim}"));
        }
        if !(q / p < 1.0 + 1.0 / n) {
            violations.push(format!("(H)(i) q/p < 1 + 1/N fails: q/p = {} >= {}", q / p, 1.0 + 1.0 / n));
        }
        if mode == Mode::Strict && !violations.is_empty() {
            return Err(Error::Config(violations.join("; ")));
        }
        for v in &violations {
            log::warn!("relaxed mode: {v}");
        }
        Ok((Self { p, q, dim, p_star }, violations))
    }
}

/// Which modular a Luxemburg norm is taken for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    /// ρ_H(u) = ∫ |u|^p + μ|u|^q.
    Function,
    /// ρ_{H,F}(u) = ∫ F^p(∇u) + μ F^q(∇u).
    Gradient,
}

/// Nonnegative weight μ as P1 nodal values.
#[derive(Debug, Clone)]
pub struct WeightField {
    mesh: Arc<BoxMesh>,
    values: Vec<f64>,
}

/// How μ is specified in an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightSpec {
    Constant { value: f64 },
    /// a · dist(x, ∂Ω).
    DistToBoundary { a: f64 },
    /// a · x_axis (axis counted from 0).
    Coordinate { a: f64, axis: usize },
    /// One value per mesh vertex, in vertex order.
    Csv { path: String },
}

impl WeightField {
    pub fn new(mesh: Arc<BoxMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::Config(format!(
                "weight field has {} values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        if let Some((v, x)) = values.iter().enumerate().find(|(_, x)| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::Config(format!("weight mu must be finite and >= 0, vertex {v} has {x}")));
        }
        Ok(Self { mesh, values })
    }

    pub fn constant(mesh: Arc<BoxMesh>, value: f64) -> Result<Self> {
        let n = mesh.n_vertices();
        Self::new(mesh, vec![value; n])
    }

    pub fn from_fn(mesh: Arc<BoxMesh>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..mesh.n_vertices()).map(|v| f(mesh.vertex(v))).collect();
        Self::new(mesh, values)
    }

    pub fn from_spec(mesh: Arc<BoxMesh>, spec: &WeightSpec) -> Result<Self> {
        match spec {
            WeightSpec::Constant { value } => Self::constant(mesh, *value),
            WeightSpec::DistToBoundary { a } => {
                let ext = mesh.extents().to_vec();
                Self::from_fn(mesh, |x| {
                    a * x.iter().zip(&ext).map(|(c, l)| c.min(l - c)).fold(f64::INFINITY, f64::min)
                })
            }
            WeightSpec::Coordinate { a, axis } => {
                if *axis >= mesh.dim() {
                    return Err(Error::Config(format!("mu axis {axis} out of range")));
                }
                Self::from_fn(mesh, |x| a * x[*axis])
            }
            WeightSpec::Csv { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read mu file {path}: {e}")))?;
                let values = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && l.parse::<f64>().is_ok())
                    .map(|l| l.parse::<f64>().unwrap())
                    .collect();
                Self::new(mesh, values)
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mesh(&self) -> &Arc<BoxMesh> {
        &self.mesh
    }

    /// ∫_T μ / |T| (exact for the P1 interpolant).
    pub fn element_mean(&self, k: usize) -> f64 {
        let s = self.mesh.simplex(k);
        s.iter().map(|&v| self.values[v]).sum::<f64>() / s.len() as f64
    }

    pub fn value_on(&self, k: usize, bary: &[f64]) -> f64 {
        self.mesh.simplex(k).iter().zip(bary).map(|(&v, l)| l * self.values[v]).sum()
    }

    /// Largest edge difference quotient |μ(a) − μ(b)| / |a − b|; reported,
    /// not enforced.
    pub fn lipschitz_estimate(&self) -> f64 {
        self.mesh
            .edges()
            .into_iter()
            .map(|(a, b)| {
                let len = self
                    .mesh
                    .vertex(a)
                    .iter()
                    .zip(self.mesh.vertex(b))
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                (self.values[a] - self.values[b]).abs() / len
            })
            .fold(0.0, f64::max)
    }
}

fn check_mesh(u: &FeFunction, w: &WeightField) -> Result<()> {
    if !Arc::ptr_eq(u.mesh(), w.mesh()) && u.mesh().n_vertices() != w.mesh().n_vertices() {
        return Err(Error::InvalidInput("function and weight live on different meshes".into()));
    }
    Ok(())
}

/// (∫|u|^p, ∫μ|u|^q) by quadrature.
pub fn function_parts(u: &FeFunction, w: &WeightField, exps: &DoublePhaseExponents, rule: &QuadratureRule) -> (f64, f64) {
    let mesh = u.mesh();
    let parts = map_indexed(mesh.n_simplices(), mesh.execution(), |k| {
        let (mut a, mut b) = (0.0, 0.0);
        for (pt, wt) in rule.points().iter().zip(rule.unit_weights()) {
            let v = u.value_on(k, pt).abs();
            a += wt * v.powf(exps.p);
            b += wt * w.value_on(k, pt) * v.powf(exps.q);
        }
        (a * mesh.volume(k), b * mesh.volume(k))
    });
    let a: Vec<f64> = parts.iter().map(|x| x.0).collect();
    let b: Vec<f64> = parts.iter().map(|x| x.1).collect();
    (pairwise_sum(&a), pairwise_sum(&b))
}

/// (∫F^p(∇u), ∫μF^q(∇u)), exact per element.
pub fn gradient_parts(u: &FeFunction, w: &WeightField, exps: &DoublePhaseExponents, norm: &dyn MinkowskiNorm) -> (f64, f64) {
    let mesh = u.mesh();
    let parts = map_indexed(mesh.n_simplices(), mesh.execution(), |k| {
        let mut g = [0.0; 3];
        let g = &mut g[..mesh.dim()];
        u.gradient_on(k, g);
        if g.iter().all(|&v| v == 0.0) {
            return (0.0, 0.0);
        }
        let f = norm.value(g);
        let vol = mesh.volume(k);
        (vol * f.powf(exps.p), vol * w.element_mean(k) * f.powf(exps.q))
    });
    let a: Vec<f64> = parts.iter().map(|x| x.0).collect();
    let b: Vec<f64> = parts.iter().map(|x| x.1).collect();
    (pairwise_sum(&a), pairwise_sum(&b))
}

/// ρ_H(u) = ∫ (|u|^p + μ|u|^q) dx.
pub fn modular_rho_h(u: &FeFunction, w: &WeightField, exps: &DoublePhaseExponents, rule: &QuadratureRule) -> Result<f64> {
    check_mesh(u, w)?;
    let (a, b) = function_parts(u, w, exps, rule);
    Ok(a + b)
}

/// ρ_{H,F}(u) = ∫ (F^p(∇u) + μ F^q(∇u)) dx.
pub fn modular_rho_hf(u: &FeFunction, w: &WeightField, exps: &DoublePhaseExponents, norm: &dyn MinkowskiNorm) -> Result<f64> {
    check_mesh(u, w)?;
    let (a, b) = gradient_parts(u, w, exps, norm);
    Ok(a + b)
}

fn parts_for(
    u: &FeFunction,
    w: &WeightField,
    exps: &DoublePhaseExponents,
    which: Which,
    norm: &dyn MinkowskiNorm,
    rule: &QuadratureRule,
) -> Result<(f64, f64)> {
    check_mesh(u, w)?;
    Ok(match which {
        Which::Function => function_parts(u, w, exps, rule),
        Which::Gradient => gradient_parts(u, w, exps, norm),
    })
}

const MODULAR_TOL: f64 = 1e-12;

/// Root τ of P τ^{-p} + Q τ^{-q} = 1, i.e. ρ(u/τ) = 1 for a modular that
/// splits into a p-homogeneous part P and a q-homogeneous part Q.
pub fn luxemburg_from_parts(big_p: f64, big_q: f64, p: f64, q: f64) -> Result<f64> {
    let total = big_p + big_q;
    if total == 0.0 {
        return Ok(0.0);
    }
    if !total.is_finite() {
        return Err(Error::Numerical("non-finite modular".into()));
    }
    let rho = |tau: f64| big_p * tau.powf(-p) + big_q * tau.powf(-q);
    let (t1, t2) = (total.powf(1.0 / p), total.powf(1.0 / q));
    let (mut lo, mut hi) = (t1.min(t2), t1.max(t2));
    let mut doublings = 0;
    while rho(lo) < 1.0 {
        lo *= 0.5;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Numerical("Luxemburg bracket failure".into()));
        }
    }
    while rho(hi) > 1.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Numerical("Luxemburg bracket failure".into()));
        }
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let r = rho(mid);
        if (r - 1.0).abs() <= MODULAR_TOL || mid <= lo || mid >= hi {
            break;
        }
        if r > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Luxemburg norm inf{τ > 0 : ρ(u/τ) ≤ 1}; 0 for u ≡ 0.
pub fn luxemburg_norm(
    u: &FeFunction,
    w: &WeightField,
    exps: &DoublePhaseExponents,
    which: Which,
    norm: &dyn MinkowskiNorm,
    rule: &QuadratureRule,
) -> Result<f64> {
    if u.is_zero() {
        return Ok(0.0);
    }
    let (a, b) = parts_for(u, w, exps, which, norm, rule)?;
    luxemburg_from_parts(a, b, exps.p, exps.q)
}

/// Outcome of checking the modular-norm relations for one function.
#[derive(Debug, Clone, Serialize)]
pub struct ModularNormReport {
    pub norm: f64,
    pub modular: f64,
    /// |ρ(u/‖u‖) − 1|, with the modular re-evaluated on the scaled function.
    pub unit_residual: f64,
    pub sign_agreement: bool,
    pub power_bounds: bool,
    pub violations: Vec<String>,
}

impl ModularNormReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks: sign(‖u‖ − 1) = sign(ρ(u) − 1); ‖u‖^q ≤ ρ(u) ≤ ‖u‖^p when
/// ‖u‖ < 1 and ‖u‖^p ≤ ρ(u) ≤ ‖u‖^q when ‖u‖ > 1; ρ(u/‖u‖) = 1.
/// Violations are collected, not raised.
pub fn modular_norm_relations_check(
    u: &FeFunction,
    w: &WeightField,
    exps: &DoublePhaseExponents,
    which: Which,
    norm: &dyn MinkowskiNorm,
    rule: &QuadratureRule,
) -> Result<ModularNormReport> {
    let (a, b) = parts_for(u, w, exps, which, norm, rule)?;
    let modular = a + b;
    let tau = luxemburg_from_parts(a, b, exps.p, exps.q)?;
    let mut violations = Vec::new();
    if tau == 0.0 {
        return Ok(ModularNormReport {
            norm: 0.0,
            modular,
            unit_residual: 0.0,
            sign_agreement: true,
            power_bounds: true,
            violations,
        });
    }
    let (ua, ub) = parts_for(&u.scaled(1.0 / tau), w, exps, which, norm, rule)?;
    let unit_residual = (ua + ub - 1.0).abs();
    if unit_residual > 1e-10 {
        violations.push(format!("rho(u/|u|) - 1 = {unit_residual:e}"));
    }

    // relative slack for roundoff in the bisection and quadrature sums
    let slack = 1e-10;
    let sign = |x: f64| if x.abs() <= slack { 0 } else if x > 0.0 { 1 } else { -1 };
    let s_norm = sign(tau - 1.0);
    let s_mod = sign(modular - 1.0);
    let sign_agreement = s_norm == s_mod || s_norm == 0 || s_mod == 0;
    if !sign_agreement {
        violations.push(format!("sign mismatch: |u| = {tau}, rho(u) = {modular}"));
    }
    let (lo, hi) = if tau < 1.0 {
        (tau.powf(exps.q), tau.powf(exps.p))
    } else {
        (tau.powf(exps.p), tau.powf(exps.q))
    };
    let power_bounds = modular >= lo * (1.0 - slack) && modular <= hi * (1.0 + slack);
    if !power_bounds {
        violations.push(format!("power bounds fail: {lo} <= {modular} <= {hi}"));
    }
    Ok(ModularNormReport { norm: tau, modular, unit_residual, sign_agreement, power_bounds, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::{build_mesh, lp_norm, w1p0f_norm};
    use crate::minkowski::Euclidean;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Arc<BoxMesh>, DoublePhaseExponents, QuadratureRule, Euclidean) {
        let mesh = Arc::new(build_mesh(3, &[1.0; 3], &[3; 3]).unwrap());
        let (exps, _) = DoublePhaseExponents::new(2.0, 2.5, 3, Mode::Strict).unwrap();
        (mesh, exps, QuadratureRule::new(3, 4).unwrap(), Euclidean::new(3).unwrap())
    }

    fn random_fn(mesh: &Arc<BoxMesh>, rng: &mut ChaCha8Rng) -> FeFunction {
        let c = (0..mesh.n_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect();
        FeFunction::from_coefficients(mesh.clone(), c).unwrap()
    }

    #[test]
    fn exponent_validation() {
        let (e, w) = DoublePhaseExponents::new(2.0, 2.5, 3, Mode::Strict).unwrap();
        assert_eq!(e.p_star, 6.0);
        assert!(w.is_empty());
        let err = DoublePhaseExponents::new(2.0, 2.8, 3, Mode::Strict).unwrap_err();
        assert!(err.to_string().contains("q/p < 1 + 1/N"));
        let (_, w) = DoublePhaseExponents::new(1.5, 1.8, 2, Mode::Relaxed).unwrap();
        assert_eq!(w.len(), 1);
        assert!(DoublePhaseExponents::new(2.0, 2.5, 2, Mode::Relaxed).is_err());
    }

    #[test]
    fn modular_examples() {
        let (mesh, exps, rule, e) = setup();
        let w = WeightField::constant(mesh.clone(), 0.0).unwrap();
        let zero = FeFunction::zeros(mesh.clone());
        assert_eq!(modular_rho_h(&zero, &w, &exps, &rule).unwrap(), 0.0);
        assert_eq!(modular_rho_hf(&zero, &w, &exps, &e).unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_fn(&mesh, &mut rng);
        let lp = lp_norm(&u, 2.0).unwrap();
        assert!((modular_rho_h(&u, &w, &exps, &rule).unwrap() - lp.powi(2)).abs() < 1e-12);
        let grad = w1p0f_norm(&u, &e, 2.0);
        assert!((modular_rho_hf(&u, &w, &exps, &e).unwrap() - grad.powi(2)).abs() < 1e-12);

        let one = FeFunction::interpolate_raw(mesh.clone(), |_| 1.0);
        let w1 = WeightField::constant(mesh, 1.0).unwrap();
        assert!((modular_rho_h(&one, &w1, &exps, &rule).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn luxemburg_constant_function() {
        let (mesh, exps, rule, e) = setup();
        let one = FeFunction::interpolate_raw(mesh.clone(), |_| 1.0);
        let w = WeightField::constant(mesh, 1.0).unwrap();
        let tau = luxemburg_norm(&one, &w, &exps, Which::Function, &e, &rule).unwrap();
        // scalar bisection on (1/τ)² + (1/τ)^2.5 = 1
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.powf(-2.0) + mid.powf(-2.5) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((tau - lo).abs() < 1e-11, "{tau} vs {lo}");
        assert!((tau - 1.362).abs() < 1e-3);
    }

    #[test]
    fn luxemburg_reduces_to_lp_and_is_homogeneous() {
        let (mesh, exps, rule, e) = setup();
        let w0 = WeightField::constant(mesh.clone(), 0.0).unwrap();
        let w = WeightField::from_fn(mesh.clone(), |x| 0.5 + x[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let u = random_fn(&mesh, &mut rng);
            let lux = luxemburg_norm(&u, &w0, &exps, Which::Function, &e, &rule).unwrap();
            assert!((lux - lp_norm(&u, 2.0).unwrap()).abs() < 1e-10);
            for which in [Which::Function, Which::Gradient] {
                let a = luxemburg_norm(&u, &w, &exps, which, &e, &rule).unwrap();
                let b = luxemburg_norm(&u.scaled(2.0), &w, &exps, which, &e, &rule).unwrap();
                assert!((b - 2.0 * a).abs() < 1e-10 * a.max(1.0));
            }
        }
        assert_eq!(luxemburg_norm(&FeFunction::zeros(mesh), &w, &exps, Which::Gradient, &e, &rule).unwrap(), 0.0);
    }

    #[test]
    fn relations_at_scaled_points() {
        let (mesh, exps, rule, e) = setup();
        let w = WeightField::constant(mesh.clone(), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_fn(&mesh, &mut rng);
        let tau = luxemburg_norm(&u, &w, &exps, Which::Function, &e, &rule).unwrap();
        let unit = u.scaled(1.0 / tau);
        assert!((modular_rho_h(&unit, &w, &exps, &rule).unwrap() - 1.0).abs() < 1e-10);
        let half = u.scaled(0.5 / tau);
        let rho = modular_rho_h(&half, &w, &exps, &rule).unwrap();
        assert!(rho >= 2f64.powf(-2.5) && rho <= 0.25, "{rho}");
        let rep = modular_norm_relations_check(&half, &w, &exps, Which::Function, &e, &rule).unwrap();
        assert!(rep.passes(), "{rep:?}");
    }

    #[test]
    fn modular_decreases_in_tau() {
        let (mesh, exps, rule, e) = setup();
        let w = WeightField::from_fn(mesh.clone(), |x| x[1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_fn(&mesh, &mut rng);
        let mut prev = f64::INFINITY;
        for i in 1..40 {
            let tau = 0.05 * i as f64;
            let r = modular_rho_hf(&u.scaled(1.0 / tau), &w, &exps, &e).unwrap();
            assert!(r < prev);
            prev = r;
        }
        let _ = rule;
    }

    #[test]
    fn weight_specs() {
        let mesh = Arc::new(build_mesh(3, &[1.0, 2.0, 1.0], &[2, 4, 2]).unwrap());
        let w = WeightField::from_spec(mesh.clone(), &WeightSpec::DistToBoundary { a: 2.0 }).unwrap();
        assert_eq!(w.values()[mesh.interior_vertices()[0]], 1.0);
        let w = WeightField::from_spec(mesh.clone(), &WeightSpec::Coordinate { a: 0.5, axis: 0 }).unwrap();
        assert!((w.lipschitz_estimate() - 0.5).abs() < 1e-12);
        assert!(WeightField::constant(mesh.clone(), -1.0).is_err());
        assert!(WeightField::from_spec(mesh, &WeightSpec::Coordinate { a: 1.0, axis: 3 }).is_err());
    }
}
