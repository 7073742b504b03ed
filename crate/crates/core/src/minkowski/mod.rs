//! Minkowski norms on R^N: evaluation, derivatives, the uniformity constant
//! and the convexity inequalities that depend on it.

mod consistency;
mod inequalities;
mod randers;
mod uniformity;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use consistency::{check_consistency, validate_user_norm, NormDiagnostics};
pub use inequalities::{lindqvist_check, parallelogram_check, InequalityResidual};
pub use randers::{randers_validate, Randers, RandersSpec};
pub use uniformity::{uniformity_constant, uniformity_constant_with, UniformityEstimate};

/// Euclidean length below which a point is treated as the origin.
pub const SINGULAR_TOL: f64 = 1e-14;

/// A positively 1-homogeneous, strictly convex norm that is smooth away
/// from the origin and may be asymmetric.
///
/// The raw methods skip input validation; use [`norm_eval`],
/// [`norm_grad`] and [`norm_hess_half_sq`] for checked access.
pub trait MinkowskiNorm: Send + Sync {
    fn dim(&self) -> usize;

    /// F(x).
    fn value(&self, x: &[f64]) -> f64;

    /// Writes ∇F(x) into `out`. Undefined at the origin.
    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// Hessian of F²/2 at x. Undefined at the origin.
    fn hessian_half_sq(&self, x: &[f64]) -> DMatrix<f64>;

    fn label(&self) -> String;
}

/// The standard Euclidean norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Euclidean {
    dim: usize,
}

impl Euclidean {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("dimension {dim} < 2")));
        }
        Ok(Self { dim })
    }
}

impl MinkowskiNorm for Euclidean {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.value(x);
        for (o, v) in out.iter_mut().zip(x) {
            *o = v / n;
        }
    }

    fn hessian_half_sq(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim)
    }

    fn label(&self) -> String {
        format!("euclidean(N={})", self.dim)
    }
}

/// Norm description as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NormSpec {
    Euclidean,
    /// `a` is the row-major N×N matrix.
    Riemannian { a: Vec<f64> },
    /// `a` is the row-major N×N matrix, `b` the drift vector.
    Randers { a: Vec<f64>, b: Vec<f64> },
}

/// A norm built from a [`NormSpec`].
#[derive(Debug, Clone)]
pub enum Norm {
    Euclidean(Euclidean),
    Randers(Randers),
}

impl NormSpec {
    pub fn build(&self, dim: usize) -> Result<Norm> {
        let matrix = |a: &[f64]| -> Result<DMatrix<f64>> {
            if a.len() != dim * dim {
                return Err(Error::Config(format!(
                    "norm matrix has {} entries, expected {} for N = {dim}",
                    a.len(),
                    dim * dim
                )));
            }
            Ok(DMatrix::from_row_slice(dim, dim, a))
        };
        match self {
            NormSpec::Euclidean => Ok(Norm::Euclidean(Euclidean::new(dim)?)),
            NormSpec::Riemannian { a } => {
                let spec = randers_validate(&matrix(a)?, &vec![0.0; dim])?;
                Ok(Norm::Randers(Randers::new(spec)))
            }
            NormSpec::Randers { a, b } => {
                if b.len() != dim {
                    return Err(Error::Config(format!(
                        "randers drift has {} entries, expected {dim}",
                        b.len()
                    )));
                }
                let spec = randers_validate(&matrix(a)?, b)?;
                Ok(Norm::Randers(Randers::new(spec)))
            }
        }
    }
}

impl MinkowskiNorm for Norm {
    fn dim(&self) -> usize {
        match self {
            Norm::Euclidean(n) => n.dim(),
            Norm::Randers(n) => n.dim(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Norm::Euclidean(n) => n.value(x),
            Norm::Randers(n) => n.value(x),
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Norm::Euclidean(n) => n.gradient(x, out),
            Norm::Randers(n) => n.gradient(x, out),
        }
    }

    fn hessian_half_sq(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            Norm::Euclidean(n) => n.hessian_half_sq(x),
            Norm::Randers(n) => n.hessian_half_sq(x),
        }
    }

    fn label(&self) -> String {
        match self {
            Norm::Euclidean(n) => n.label(),
            Norm::Randers(n) => n.label(),
        }
    }
}

fn check_point(norm: &dyn MinkowskiNorm, x: &[f64]) -> Result<()> {
    if x.len() != norm.dim() {
        return Err(Error::InvalidInput(format!(
            "point has dimension {}, norm has {}",
            x.len(),
            norm.dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite coordinate".into()));
    }
    Ok(())
}

fn check_nonsingular(x: &[f64]) -> Result<()> {
    let len = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len < SINGULAR_TOL {
        return Err(Error::SingularPoint { norm: len });
    }
    Ok(())
}

/// F(x); returns 0 at the origin.
pub fn norm_eval(norm: &dyn MinkowskiNorm, x: &[f64]) -> Result<f64> {
    check_point(norm, x)?;
    if x.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    Ok(norm.value(x))
}

/// ∇F(x) for x away from the origin.
pub fn norm_grad(norm: &dyn MinkowskiNorm, x: &[f64]) -> Result<Vec<f64>> {
    check_point(norm, x)?;
    check_nonsingular(x)?;
    let mut out = vec![0.0; x.len()];
    norm.gradient(x, &mut out);
    Ok(out)
}

/// ∇²(F²/2)(x) for x away from the origin.
pub fn norm_hess_half_sq(norm: &dyn MinkowskiNorm, x: &[f64]) -> Result<DMatrix<f64>> {
    check_point(norm, x)?;
    check_nonsingular(x)?;
    Ok(norm.hessian_half_sq(x))
}

/// The quasi-distance d_F(x, y) = F(y − x); not symmetric in general.
pub fn quasi_distance(norm: &dyn MinkowskiNorm, x: &[f64], y: &[f64]) -> Result<f64> {
    check_point(norm, x)?;
    check_point(norm, y)?;
    let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    norm_eval(norm, &d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn randers_half() -> Norm {
        NormSpec::Randers {
            a: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            b: vec![0.5, 0.0, 0.0],
        }
        .build(3)
        .unwrap()
    }

    #[test]
    fn euclidean_examples() {
        let e = Euclidean::new(3).unwrap();
        assert_eq!(norm_eval(&e, &[3.0, 4.0, 0.0]).unwrap(), 5.0);
        let g = norm_grad(&e, &[3.0, 4.0, 0.0]).unwrap();
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15 && g[2] == 0.0);
        let g2 = norm_grad(&e, &[6.0, 8.0, 0.0]).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn randers_examples() {
        let f = randers_half();
        assert!((norm_eval(&f, &[1.0, 0.0, 0.0]).unwrap() - 1.5).abs() < 1e-15);
        let g = norm_grad(&f, &[1.0, 0.0, 0.0]).unwrap();
        assert!((g[0] - 1.5).abs() < 1e-15 && g[1] == 0.0 && g[2] == 0.0);
        let euler: f64 = g.iter().zip([1.0, 0.0, 0.0]).map(|(a, b)| a * b).sum();
        assert!((euler - 1.5).abs() < 1e-15);
    }

    #[test]
    fn origin_and_errors() {
        let f = randers_half();
        assert_eq!(norm_eval(&f, &[0.0; 3]).unwrap(), 0.0);
        assert!(matches!(norm_grad(&f, &[0.0; 3]), Err(Error::SingularPoint { .. })));
        assert!(matches!(norm_grad(&f, &[1e-15, 0.0, 0.0]), Err(Error::SingularPoint { .. })));
        assert!(matches!(norm_eval(&f, &[f64::NAN, 0.0, 0.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(norm_eval(&f, &[1.0, 0.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn quasi_distance_is_asymmetric_for_randers() {
        let f = randers_half();
        let o = [0.0; 3];
        let e1 = [1.0, 0.0, 0.0];
        assert!((quasi_distance(&f, &o, &e1).unwrap() - 1.5).abs() < 1e-15);
        assert!((quasi_distance(&f, &e1, &o).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(quasi_distance(&f, &e1, &e1).unwrap(), 0.0);

        let e = Euclidean::new(3).unwrap();
        let x = [0.3, -1.2, 2.0];
        let y = [1.0, 0.5, -0.7];
        assert_eq!(quasi_distance(&e, &x, &y).unwrap(), quasi_distance(&e, &y, &x).unwrap());
    }

    #[test]
    fn spec_dimension_mismatch_is_config_error() {
        let spec = NormSpec::Randers { a: vec![1.0; 4], b: vec![0.0; 3] };
        assert!(matches!(spec.build(3), Err(Error::Config(_))));
    }

    #[test]
    fn spec_roundtrips_through_toml() {
        let spec = NormSpec::Randers { a: vec![4.0, 0.0, 0.0, 1.0], b: vec![0.5, 0.0] };
        let s = toml::to_string(&spec).unwrap();
        assert!(s.contains("kind = \"randers\""));
        let back: NormSpec = toml::from_str(&s).unwrap();
        assert_eq!(back, spec);
    }
}
