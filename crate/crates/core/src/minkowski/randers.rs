use nalgebra::{DMatrix, DVector};

use super::MinkowskiNorm;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Validated Randers data: A symmetric positive definite and bᵀA⁻¹b < 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RandersSpec {
    a: DMatrix<f64>,
    b: DVector<f64>,
    drift_sq: f64,
}

impl RandersSpec {
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// bᵀA⁻¹b.
    pub fn drift_sq(&self) -> f64 {
        self.drift_sq
    }
}

/// Validates (A, b) for F(x) = √(xᵀAx) + bᵀx.
pub fn randers_validate(a: &DMatrix<f64>, b: &[f64]) -> Result<RandersSpec> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidInput(format!("A is {}x{}, not square", n, a.ncols())));
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!("dimension {n} < 2")));
    }
    if b.len() != n {
        return Err(Error::InvalidInput(format!("b has length {}, expected {n}", b.len())));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite entry in A or b".into()));
    }
    let asymmetry = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (a[(i, j)] - a[(j, i)]).abs())
        .fold(0.0, f64::max);
    if asymmetry > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let chol = a.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let b = DVector::from_column_slice(b);
    let drift_sq = b.dot(&chol.solve(&b));
    if drift_sq >= 1.0 {
        return Err(Error::DegenerateNorm { value: drift_sq });
    }
    Ok(RandersSpec { a: a.clone(), b, drift_sq })
}

/// Randers norm F(x) = √(xᵀAx) + bᵀx; with b = 0 this is a Riemannian
/// (inner-product) norm.
#[derive(Debug, Clone)]
pub struct Randers {
    spec: RandersSpec,
    // row-major copy for the hot path
    a_flat: Vec<f64>,
}

impl Randers {
    pub fn new(spec: RandersSpec) -> Self {
        let n = spec.a.nrows();
        let a_flat = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|ij| spec.a[ij]).collect();
        Self { spec, a_flat }
    }

    pub fn spec(&self) -> &RandersSpec {
        &self.spec
    }

    fn dim_(&self) -> usize {
        self.spec.b.len()
    }

    fn a_times(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim_();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let row = &self.a_flat[i * n..(i + 1) * n];
            *o = row.iter().zip(x).map(|(r, v)| r * v).sum();
        }
    }
}

impl MinkowskiNorm for Randers {
    fn dim(&self) -> usize {
        self.dim_()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.dim_();
        if n > 8 {
            return self.value_slow(x);
        }
        let mut buf = [0.0; 8];
        let ax = &mut buf[..n];
        self.a_times(x, ax);
        let alpha = ax.iter().zip(x).map(|(a, v)| a * v).sum::<f64>().max(0.0).sqrt();
        let beta: f64 = self.spec.b.iter().zip(x).map(|(b, v)| b * v).sum();
        alpha + beta
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.a_times(x, out);
        let alpha = out.iter().zip(x).map(|(a, v)| a * v).sum::<f64>().sqrt();
        for (o, b) in out.iter_mut().zip(self.spec.b.iter()) {
            *o = *o / alpha + b;
        }
    }

    fn hessian_half_sq(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim_();
        let mut ax = vec![0.0; n];
        self.a_times(x, &mut ax);
        let alpha = ax.iter().zip(x).map(|(a, v)| a * v).sum::<f64>().sqrt();
        let f = alpha + self.spec.b.iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
        let grad: Vec<f64> = ax.iter().zip(self.spec.b.iter()).map(|(a, b)| a / alpha + b).collect();
        // ∇F∇Fᵀ + F ∇²F with ∇²F = A/α − (Ax)(Ax)ᵀ/α³
        DMatrix::from_fn(n, n, |i, j| {
            grad[i] * grad[j] + f * (self.spec.a[(i, j)] / alpha - ax[i] * ax[j] / alpha.powi(3))
        })
    }

    fn label(&self) -> String {
        if self.spec.b.iter().all(|&v| v == 0.0) {
            format!("riemannian(N={})", self.dim_())
        } else {
            format!("randers(N={}, |b|_A={:.6})", self.dim_(), self.spec.drift_sq.sqrt())
        }
    }
}

impl Randers {
    fn value_slow(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.dim_()];
        self.a_times(x, &mut ax);
        let alpha = ax.iter().zip(x).map(|(a, v)| a * v).sum::<f64>().max(0.0).sqrt();
        alpha + self.spec.b.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}
