#![allow(dead_code)]

use std::sync::Arc;

use finsler_dp::energy::{Nonlinearity, ProblemSpec};
use finsler_dp::fespace::{build_mesh, BoxMesh, FeFunction};
use finsler_dp::minkowski::{MinkowskiNorm, NormSpec};
use finsler_dp::musielak::{Mode, WeightField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn cube(n: usize) -> Arc<BoxMesh> {
    Arc::new(build_mesh(3, &[1.0; 3], &[n; 3]).unwrap())
}

pub fn euclidean() -> Arc<dyn MinkowskiNorm> {
    Arc::new(NormSpec::Euclidean.build(3).unwrap())
}

pub fn randers() -> Arc<dyn MinkowskiNorm> {
    let a = vec![2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5];
    Arc::new(NormSpec::Randers { a, b: vec![0.4, -0.2, 0.3] }.build(3).unwrap())
}

pub fn default_g() -> Nonlinearity {
    Nonlinearity::new(1.0, 1.0, 3.0, 1.5)
}

/// p = 2, q = 2.5, γ = 0.5, c = 1, the default g and μ = 0.5·x₁.
pub fn default_spec(mesh: &Arc<BoxMesh>, norm: Arc<dyn MinkowskiNorm>, lambda: f64) -> ProblemSpec {
    let mu = WeightField::from_fn(mesh.clone(), |x| 0.5 * x[0]).unwrap();
    ProblemSpec::new(2.0, 2.5, 0.5, 1.0, lambda, mu, default_g(), norm, 4, Mode::Strict).unwrap().0
}

pub fn spec_with(
    mesh: &Arc<BoxMesh>,
    norm: Arc<dyn MinkowskiNorm>,
    p: f64,
    q: f64,
    mu: impl Fn(&[f64]) -> f64,
    lambda: f64,
) -> ProblemSpec {
    let mu = WeightField::from_fn(mesh.clone(), mu).unwrap();
    ProblemSpec::new(p, q, 0.5, 1.0, lambda, mu, default_g(), norm, 4, Mode::Strict).unwrap().0
}

pub fn bump(mesh: &Arc<BoxMesh>) -> FeFunction {
    FeFunction::interpolate(mesh.clone(), |x| x.iter().map(|t| (std::f64::consts::PI * t).sin()).product())
}

pub fn random_function(mesh: &Arc<BoxMesh>, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> FeFunction {
    let values: Vec<f64> = (0..mesh.interior_vertices().len()).map(|_| rng.random_range(lo..hi)).collect();
    FeFunction::from_interior(mesh.clone(), &values).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gradient of the P1 function with vertex values `vals` on the simplex
/// with vertices `xs`, from the edge system.
pub fn simplex_gradient(xs: &[Vec<f64>], vals: &[f64]) -> (Vec<f64>, f64) {
    let d = xs.len() - 1;
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| xs[i + 1][j] - xs[0][j]);
    let rhs = nalgebra::DVector::from_fn(d, |i, _| vals[i + 1] - vals[0]);
    let g = m.clone().lu().solve(&rhs).unwrap();
    let fact: f64 = (1..=d).map(|k| k as f64).product();
    (g.iter().copied().collect(), m.determinant().abs() / fact)
}

/// Random values at every vertex, boundary included.
pub fn random_raw(mesh: &Arc<BoxMesh>, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> FeFunction {
    let r = std::cell::RefCell::new(rng);
    FeFunction::interpolate_raw(mesh.clone(), |_| r.borrow_mut().random_range(lo..hi))
}

/// d/dt J(tφ) for the single interior hat φ of the 2³-cell cube, from
/// element moments computed here.
pub struct ScalarOracle {
    ap: f64,
    aq: f64,
    moments: Vec<(f64, f64)>,
}

impl ScalarOracle {
    pub fn new(spec: &ProblemSpec) -> Self {
        let mesh = spec.mesh();
        let centre = mesh.interior_vertices()[0];
        let (mut ap, mut aq) = (0.0, 0.0);
        let mut moments = Vec::new();
        for k in 0..mesh.n_simplices() {
            let s = mesh.simplex(k);
            let Some(j) = s.iter().position(|&v| v == centre) else { continue };
            let xs: Vec<Vec<f64>> = s.iter().map(|&v| mesh.vertex(v).to_vec()).collect();
            let vals: Vec<f64> = (0..s.len()).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            let (grad, vol) = simplex_gradient(&xs, &vals);
            let f = spec.norm.value(&grad);
            let mu: f64 = s.iter().map(|&v| spec.mu.values()[v]).sum::<f64>() / s.len() as f64;
            ap += vol * f.powf(spec.exps.p);
            aq += vol * mu * f.powf(spec.exps.q);
            for (bary, w) in spec.rule.points().iter().zip(spec.rule.unit_weights()) {
                moments.push((vol * w, bary[j]));
            }
        }
        Self { ap, aq, moments }
    }

    pub fn moment(&self, e: f64) -> f64 {
        self.moments.iter().map(|(w, b)| w * b.powf(e)).sum()
    }

    pub fn derivative(&self, spec: &ProblemSpec, t: f64) -> f64 {
        let (p, q, ps) = (spec.exps.p, spec.exps.q, spec.exps.p_star);
        let g = spec.g;
        t.powf(p - 1.0) * self.ap + t.powf(q - 1.0) * self.aq
            - t.powf(ps - 1.0) * self.moment(ps)
            - spec.c * t.powf(spec.gamma - 1.0) * self.moment(spec.gamma)
            - spec.lambda
                * (g.a1 * t.powf(g.nu - 1.0) * self.moment(g.nu) + g.a2 * t.powf(g.theta - 1.0) * self.moment(g.theta))
    }

    /// First sign change − → + of the derivative, refined by bisection.
    pub fn root(&self, spec: &ProblemSpec) -> f64 {
        let mut lo = 1e-8;
        assert!(self.derivative(spec, lo) < 0.0);
        let mut hi = lo;
        while self.derivative(spec, hi) < 0.0 {
            lo = hi;
            hi *= 1.05;
            assert!(hi < 1e3);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.derivative(spec, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

