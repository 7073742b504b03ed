use std::sync::Arc;

use super::{BoxMesh, QuadratureRule};
use crate::error::{Error, Result};
use crate::minkowski::MinkowskiNorm;
use crate::par::{map_indexed, pairwise_sum};

/// P1 finite-element function: one coefficient per mesh vertex.
///
/// Functions built through the regular constructors vanish on boundary
/// vertices. [`FeFunction::interpolate_raw`] skips that step and exists
/// for tests that need e.g. the constant 1.
#[derive(Debug, Clone)]
pub struct FeFunction {
    mesh: Arc<BoxMesh>,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn zeros(mesh: Arc<BoxMesh>) -> Self {
        let n = mesh.n_vertices();
        Self { mesh, coeffs: vec![0.0; n] }
    }

    /// Nodal interpolant of `f` with the zero trace enforced.
    pub fn interpolate(mesh: Arc<BoxMesh>, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut u = Self::interpolate_raw(mesh, f);
        u.enforce_zero_trace();
        u
    }

    /// Nodal interpolant without touching boundary values.
    pub fn interpolate_raw(mesh: Arc<BoxMesh>, f: impl Fn(&[f64]) -> f64) -> Self {
        let coeffs = (0..mesh.n_vertices()).map(|v| f(mesh.vertex(v))).collect();
        Self { mesh, coeffs }
    }

    /// Takes all vertex coefficients; boundary entries are zeroed.
    pub fn from_coefficients(mesh: Arc<BoxMesh>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.n_vertices() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for a mesh with {} vertices",
                coeffs.len(),
                mesh.n_vertices()
            )));
        }
        let mut u = Self { mesh, coeffs };
        u.enforce_zero_trace();
        Ok(u)
    }

    /// Builds a function from its values at [`BoxMesh::interior_vertices`].
    pub fn from_interior(mesh: Arc<BoxMesh>, values: &[f64]) -> Result<Self> {
        let interior = mesh.interior_vertices();
        if values.len() != interior.len() {
            return Err(Error::InvalidInput(format!(
                "{} interior values for {} interior vertices",
                values.len(),
                interior.len()
            )));
        }
        let mut coeffs = vec![0.0; mesh.n_vertices()];
        for (&v, &x) in interior.iter().zip(values) {
            coeffs[v] = x;
        }
        Ok(Self { mesh, coeffs })
    }

    /// Hat function of an interior vertex.
    pub fn hat(mesh: Arc<BoxMesh>, vertex: usize) -> Result<Self> {
        if vertex >= mesh.n_vertices() || mesh.is_boundary(vertex) {
            return Err(Error::InvalidInput(format!("vertex {vertex} is not an interior vertex")));
        }
        let mut u = Self::zeros(mesh);
        u.coeffs[vertex] = 1.0;
        Ok(u)
    }

    /// Idempotent.
    pub fn enforce_zero_trace(&mut self) {
        for v in 0..self.coeffs.len() {
            if self.mesh.is_boundary(v) {
                self.coeffs[v] = 0.0;
            }
        }
    }

    pub fn mesh(&self) -> &Arc<BoxMesh> {
        &self.mesh
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.mesh.interior_vertices().iter().map(|&v| self.coeffs[v]).collect()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { mesh: self.mesh.clone(), coeffs: self.coeffs.iter().map(|c| t * c).collect() }
    }

    /// `self + t * other`.
    pub fn axpy(&self, t: f64, other: &FeFunction) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + t * b).collect();
        Self { mesh: self.mesh.clone(), coeffs }
    }

    /// Smallest coefficient over interior vertices (+∞ without any).
    pub fn min_interior(&self) -> f64 {
        self.mesh.interior_vertices().iter().map(|&v| self.coeffs[v]).fold(f64::INFINITY, f64::min)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Gradient of the affine restriction to simplex `k`, no bounds check.
    pub fn gradient_on(&self, k: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &v) in self.mesh.simplex(k).iter().enumerate() {
            let c = self.coeffs[v];
            if c != 0.0 {
                for (o, g) in out.iter_mut().zip(self.mesh.basis_gradient(k, j)) {
                    *o += c * g;
                }
            }
        }
    }

    /// Exact gradient on simplex `k`.
    pub fn element_gradient(&self, k: usize) -> Result<Vec<f64>> {
        if k >= self.mesh.n_simplices() {
            return Err(Error::InvalidInput(format!(
                "simplex index {k} out of range ({} simplices)",
                self.mesh.n_simplices()
            )));
        }
        let mut g = vec![0.0; self.mesh.dim()];
        self.gradient_on(k, &mut g);
        Ok(g)
    }

    /// Value at barycentric point `bary` of simplex `k`.
    pub fn value_on(&self, k: usize, bary: &[f64]) -> f64 {
        self.mesh.simplex(k).iter().zip(bary).map(|(&v, l)| l * self.coeffs[v]).sum()
    }
}

/// Σ over simplices of |T| Σ wᵢ f(xᵢ, T). Fails on the first simplex that
/// produces a non-finite value.
pub fn integrate(
    mesh: &BoxMesh,
    rule: &QuadratureRule,
    integrand: impl Fn(&[f64], usize) -> f64 + Sync + Send,
) -> Result<f64> {
    if rule.dim() != mesh.dim() {
        return Err(Error::InvalidInput("quadrature rule and mesh dimensions differ".into()));
    }
    let parts = map_indexed(mesh.n_simplices(), mesh.execution(), |k| {
        let mut x = [0.0; 3];
        let x = &mut x[..mesh.dim()];
        let mut s = 0.0;
        for (p, w) in rule.points().iter().zip(rule.unit_weights()) {
            mesh.point(k, p, x);
            s += w * integrand(x, k);
        }
        s * mesh.volume(k)
    });
    if let Some(k) = parts.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericalDomain { what: "integrand".into(), simplex: Some(k) });
    }
    Ok(pairwise_sum(&parts))
}

/// ‖u‖_{1,p,0,F} = ‖F(∇u)‖_p, exact for P1.
pub fn w1p0f_norm(u: &FeFunction, norm: &dyn MinkowskiNorm, p: f64) -> f64 {
    let mesh = u.mesh();
    let parts = map_indexed(mesh.n_simplices(), mesh.execution(), |k| {
        let mut g = [0.0; 3];
        let g = &mut g[..mesh.dim()];
        u.gradient_on(k, g);
        let f = if g.iter().all(|&v| v == 0.0) { 0.0 } else { norm.value(g) };
        mesh.volume(k) * f.powf(p)
    });
    pairwise_sum(&parts).powf(1.0 / p)
}

/// ‖u‖_r with a rule of order ⌈r⌉ (at least 1).
pub fn lp_norm(u: &FeFunction, r: f64) -> Result<f64> {
    let order = (r.ceil() as usize).max(1);
    let rule = QuadratureRule::new(u.mesh().dim(), order)?;
    lp_norm_with(u, r, &rule)
}

/// ‖u‖_r with the given rule; its order must be at least ⌈r⌉.
pub fn lp_norm_with(u: &FeFunction, r: f64, rule: &QuadratureRule) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::OutOfRange { what: "r", value: r, expected: "r >= 1" });
    }
    if (rule.order() as f64) < r.ceil() {
        return Err(Error::Precondition(format!("quadrature order {} < ceil({r})", rule.order())));
    }
    let mesh = u.mesh();
    let parts = map_indexed(mesh.n_simplices(), mesh.execution(), |k| {
        let s: f64 = rule
            .points()
            .iter()
            .zip(rule.unit_weights())
            .map(|(p, w)| w * u.value_on(k, p).abs().powf(r))
            .sum();
        s * mesh.volume(k)
    });
    Ok(pairwise_sum(&parts).powf(1.0 / r))
}
