use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::MinkowskiNorm;
use crate::error::{Error, Result};

const FD_STEP: f64 = 1e-5;

/// Worst observed deviations from the Minkowski-norm identities over a
/// random sample of points.
#[derive(Debug, Clone, Serialize)]
pub struct NormDiagnostics {
    pub label: String,
    pub samples: usize,
    pub min_unit_value: f64,
    pub homogeneity: f64,
    pub gradient_homogeneity: f64,
    pub euler: f64,
    pub euler_second: f64,
    pub gradient_fd: f64,
    pub hessian_fd: f64,
    pub min_hessian_eigenvalue: f64,
    pub convexity_violation: f64,
}

impl NormDiagnostics {
    pub fn passes(&self) -> bool {
        self.min_unit_value > 0.0
            && self.homogeneity <= 1e-12
            && self.gradient_homogeneity <= 1e-10
            && self.euler <= 1e-10
            && self.euler_second <= 1e-8
            && self.gradient_fd <= 1e-6
            && self.hessian_fd <= 1e-5
            && self.min_hessian_eigenvalue > 0.0
            && self.convexity_violation <= 1e-12
    }
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, min_len: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() >= min_len {
            return x;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Samples `samples` random points and measures homogeneity, both Euler
/// identities, finite-difference consistency of the derivatives,
/// positive definiteness and convexity.
pub fn check_consistency(norm: &dyn MinkowskiNorm, samples: usize, seed: u64) -> NormDiagnostics {
    let dim = norm.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = NormDiagnostics {
        label: norm.label(),
        samples,
        min_unit_value: f64::INFINITY,
        homogeneity: 0.0,
        gradient_homogeneity: 0.0,
        euler: 0.0,
        euler_second: 0.0,
        gradient_fd: 0.0,
        hessian_fd: 0.0,
        min_hessian_eigenvalue: f64::INFINITY,
        convexity_violation: 0.0,
    };
    let mut g = vec![0.0; dim];
    let mut gt = vec![0.0; dim];
    for _ in 0..samples {
        let x = random_point(&mut rng, dim, 0.1);
        let fx = norm.value(&x);
        let len = dot(&x, &x).sqrt();
        d.min_unit_value = d.min_unit_value.min(fx / len);

        let t: f64 = rng.random_range(1e-3..=10.0);
        let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
        d.homogeneity = d.homogeneity.max((norm.value(&tx) - t * fx).abs() / (t * fx));

        norm.gradient(&x, &mut g);
        norm.gradient(&tx, &mut gt);
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gdiff = g.iter().zip(&gt).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        d.gradient_homogeneity = d.gradient_homogeneity.max(gdiff / gmax);
        d.euler = d.euler.max((dot(&x, &g) - fx).abs() / fx);

        let h = norm.hessian_half_sq(&x);
        let hx = &h * nalgebra::DVector::from_column_slice(&x);
        d.euler_second = d.euler_second.max((dot(&x, hx.as_slice()) - fx * fx).abs() / (fx * fx));
        let eig = SymmetricEigen::new(h.clone()).eigenvalues.min();
        d.min_hessian_eigenvalue = d.min_hessian_eigenvalue.min(eig);

        // central differences of F and of ∇(F²/2) = F ∇F
        let mut fd_err = 0.0f64;
        let mut hess_err = 0.0f64;
        let half_sq_grad = |z: &[f64], out: &mut [f64]| {
            norm.gradient(z, out);
            let f = norm.value(z);
            out.iter_mut().for_each(|o| *o *= f);
        };
        let mut gp = vec![0.0; dim];
        let mut gm = vec![0.0; dim];
        let hmax = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += FD_STEP;
            xm[i] -= FD_STEP;
            let fd = (norm.value(&xp) - norm.value(&xm)) / (2.0 * FD_STEP);
            fd_err = fd_err.max((fd - g[i]).abs() / gmax);
            half_sq_grad(&xp, &mut gp);
            half_sq_grad(&xm, &mut gm);
            for j in 0..dim {
                let col = (gp[j] - gm[j]) / (2.0 * FD_STEP);
                hess_err = hess_err.max((col - h[(j, i)]).abs() / hmax);
            }
        }
        d.gradient_fd = d.gradient_fd.max(fd_err);
        d.hessian_fd = d.hessian_fd.max(hess_err);

        let y = random_point(&mut rng, dim, 0.0);
        let s: f64 = rng.random_range(0.0..1.0);
        let mix: Vec<f64> = x.iter().zip(&y).map(|(a, b)| s * a + (1.0 - s) * b).collect();
        let gap = norm.value(&mix) - (s * fx + (1.0 - s) * norm.value(&y));
        d.convexity_violation = d.convexity_violation.max(gap);
    }
    d
}

/// Accepts a user-supplied norm only if it passes the consistency checks
/// at 10³ random points.
pub fn validate_user_norm(norm: &dyn MinkowskiNorm, seed: u64) -> Result<NormDiagnostics> {
    if norm.dim() < 2 {
        return Err(Error::InvalidInput("norm dimension must be at least 2".into()));
    }
    let d = check_consistency(norm, 1000, seed);
    if d.passes() {
        Ok(d)
    } else {
        Err(Error::InvalidInput(format!("norm {} failed smoothness/convexity checks: {d:?}", d.label)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::{Euclidean, NormSpec};
    use nalgebra::DMatrix;

    #[test]
    fn builtin_norms_pass() {
        let e = Euclidean::new(3).unwrap();
        assert!(check_consistency(&e, 500, 1).passes());
        let r = NormSpec::Randers { a: vec![2.0, 0.3, 0.3, 1.0], b: vec![0.2, -0.4] }.build(2).unwrap();
        let d = validate_user_norm(&r, 7).unwrap();
        assert!(d.min_hessian_eigenvalue > 0.0);
    }

    /// ℓ⁴ norm paired with a wrong Hessian.
    struct L4;
    impl MinkowskiNorm for L4 {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            (x[0].powi(4) + x[1].powi(4)).powf(0.25)
        }
        fn gradient(&self, x: &[f64], out: &mut [f64]) {
            let f = self.value(x);
            out[0] = x[0].powi(3) / f.powi(3);
            out[1] = x[1].powi(3) / f.powi(3);
        }
        fn hessian_half_sq(&self, _x: &[f64]) -> DMatrix<f64> {
            // deliberately wrong
            DMatrix::identity(2, 2)
        }
        fn label(&self) -> String {
            "l4".into()
        }
    }

    #[test]
    fn inconsistent_user_norm_rejected() {
        assert!(validate_user_norm(&L4, 3).is_err());
    }
}
