use serde::Serialize;

use super::assembly::{apply_a, assemble_inner};
use super::ProblemSpec;
use crate::error::{Error, Result};
use crate::fespace::FeFunction;

/// Residual of the weak formulation over interior basis functions.
#[derive(Debug, Clone, Serialize)]
pub struct WeakResidual {
    pub max_abs: f64,
    /// ‖r‖₂ / √n over the n interior vertices.
    pub l2: f64,
    /// max over i of the right-hand side load ∫(u^{p*−1} + c u^{γ−1} + λ g(u)) φᵢ.
    pub max_load: f64,
    #[serde(skip)]
    pub residual: Vec<f64>,
}

fn check_positive(u: &FeFunction) -> Result<()> {
    let mesh = u.mesh();
    for &v in mesh.interior_vertices() {
        let value = u.coefficients()[v];
        if !(value > 0.0) {
            return Err(Error::Positivity { vertex: v, value });
        }
    }
    Ok(())
}

/// rᵢ = ⟨A(u), φᵢ⟩ − ∫(u^{p*−1} + c u^{γ−1} + λ g(u)) φᵢ, unregularized.
pub fn weak_residual(u: &FeFunction, spec: &ProblemSpec) -> Result<WeakResidual> {
    check_positive(u)?;
    let asm = assemble_inner(u, spec, 0.0, true)?;
    let n = asm.gradient.len().max(1) as f64;
    let max_abs = asm.gradient.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    let l2 = (asm.gradient.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    let max_load = asm.load.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    Ok(WeakResidual { max_abs, l2, max_load, residual: asm.gradient })
}

/// |ρ_{H,F}(u) − ∫u^{p*} − c∫u^γ − λ∫g(u)u| / max(1, ρ_{H,F}(u)).
pub fn nehari_identity_residual(u: &FeFunction, spec: &ProblemSpec) -> Result<f64> {
    check_positive(u)?;
    nehari_residual_unchecked(u, spec)
}

/// The Nehari residual without the positivity precondition; negative
/// parts of u are cut off as in the energy.
pub fn nehari_residual_unchecked(u: &FeFunction, spec: &ProblemSpec) -> Result<f64> {
    let asm = assemble_inner(u, spec, 0.0, true)?;
    let b = &asm.breakdown;
    let rho = spec.exps.p * b.p_part + spec.exps.q * b.mu_part;
    // Σ uᵢ ∫ f(u) φᵢ = ∫ f(u) u since the φᵢ reproduce u.
    let interior = u.interior_values();
    let rhs: f64 = interior.iter().zip(&asm.load).map(|(a, l)| a * l).sum();
    Ok((rho - rhs).abs() / rho.max(1.0))
}

/// ⟨A(u) − A(v), u − v⟩.
pub fn monotonicity_check(u: &FeFunction, v: &FeFunction, spec: &ProblemSpec) -> f64 {
    let w = u.axpy(-1.0, v);
    apply_a(u, &w, spec) - apply_a(v, &w, spec)
}
