use serde::Serialize;

use super::{Power, ProblemSpec};
use crate::error::{Error, Result};
use crate::fespace::FeFunction;
use crate::par::{map_indexed, pairwise_sum};

/// Parts of J_λ(u) = gradient_part − critical_part − singular_part − g_part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// ∫ F^p(∇u)/p + μ F^q(∇u)/q.
    pub gradient_part: f64,
    /// ∫ F^p(∇u)/p.
    pub p_part: f64,
    /// ∫ μ F^q(∇u)/q.
    pub mu_part: f64,
    /// ∫ (u₊)^{p*}/p*.
    pub critical_part: f64,
    /// (c/γ) ∫ (u₊)^γ, or (c/γ) ∫ ((u₊+ε)^γ − ε^γ) for ε > 0.
    pub singular_part: f64,
    /// λ ∫ G(u₊).
    pub g_part: f64,
    pub total: f64,
    pub i1: f64,
    pub i2: f64,
    pub epsilon: f64,
    pub lambda: f64,
}

/// Energy together with the assembled operator and load vectors.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub breakdown: EnergyBreakdown,
    /// ⟨A(u), φᵢ⟩ for each interior vertex.
    pub operator: Vec<f64>,
    /// ∫ (u₊^{p*−1} + c (u₊+ε)^{γ−1}[u>0] + λ g(u₊)) φᵢ.
    pub load: Vec<f64>,
    /// operator − load, the gradient of the discrete energy.
    pub gradient: Vec<f64>,
}

struct Powers {
    p: Power,
    q: Power,
    p1: Power,
    q1: Power,
    crit: Power,
    crit1: Power,
    gamma: Power,
    gamma1: Power,
}

impl Powers {
    fn new(spec: &ProblemSpec) -> Self {
        let e = &spec.exps;
        Self {
            p: Power::new(e.p),
            q: Power::new(e.q),
            p1: Power::new(e.p - 1.0),
            q1: Power::new(e.q - 1.0),
            crit: Power::new(e.p_star),
            crit1: Power::new(e.p_star - 1.0),
            gamma: Power::new(spec.gamma),
            gamma1: Power::new(spec.gamma - 1.0),
        }
    }
}

#[derive(Default, Clone, Copy)]
struct ElementOut {
    p_part: f64,
    mu_part: f64,
    critical: f64,
    singular: f64,
    g_part: f64,
    op: [f64; 4],
    load: [f64; 4],
}

/// Element flux (F^{p−1} + μ̄ F^{q−1}) ∇F(∇u) and the energy density
/// pieces F^p and μ̄F^q, all constant on the simplex.
fn element_flux(u: &FeFunction, spec: &ProblemSpec, pw: &Powers, k: usize, flux: &mut [f64]) -> (f64, f64) {
    let d = flux.len();
    let mut g = [0.0; 3];
    let g = &mut g[..d];
    u.gradient_on(k, g);
    if g.iter().all(|&v| v == 0.0) {
        flux.iter_mut().for_each(|f| *f = 0.0);
        return (0.0, 0.0);
    }
    let f = spec.norm.value(g);
    let mu = spec.mu.element_mean(k);
    spec.norm.gradient(g, flux);
    let coef = pw.p1.of(f) + mu * pw.q1.of(f);
    flux.iter_mut().for_each(|x| *x *= coef);
    (pw.p.of(f), mu * pw.q.of(f))
}

fn element(u: &FeFunction, spec: &ProblemSpec, pw: &Powers, eps: f64, k: usize, with_grad: bool) -> ElementOut {
    let mesh = u.mesh();
    let d = mesh.dim();
    let verts = mesh.simplex(k);
    let mut out = ElementOut::default();
    if verts.iter().all(|&v| u.coefficients()[v] == 0.0) {
        return out;
    }
    let vol = mesh.volume(k);
    let mut flux = [0.0; 3];
    let flux = &mut flux[..d];
    let (fp, fq) = element_flux(u, spec, pw, k, flux);
    out.p_part = vol * fp / spec.exps.p;
    out.mu_part = vol * fq / spec.exps.q;
    if with_grad {
        for j in 0..=d {
            let bg = mesh.basis_gradient(k, j);
            out.op[j] = vol * flux.iter().zip(bg).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    let eps_gamma = if eps > 0.0 { pw.gamma.of(eps) } else { 0.0 };
    let (mut crit, mut sing, mut gsum) = (0.0, 0.0, 0.0);
    for (bary, w) in spec.rule.points().iter().zip(spec.rule.unit_weights()) {
        let val = u.value_on(k, bary);
        if val <= 0.0 {
            continue;
        }
        crit += w * pw.crit.of(val);
        sing += w * (pw.gamma.of(val + eps) - eps_gamma);
        gsum += w * spec.g.big_g(val);
        if with_grad {
            let rhs = pw.crit1.of(val) + spec.c * pw.gamma1.of(val + eps) + spec.lambda * spec.g.g(val);
            for j in 0..=d {
                out.load[j] += w * rhs * bary[j];
            }
        }
    }
    out.critical = vol * crit / spec.exps.p_star;
    out.singular = vol * spec.c / spec.gamma * sing;
    out.g_part = vol * spec.lambda * gsum;
    if with_grad {
        for j in 0..=d {
            out.load[j] *= vol;
        }
    }
    out
}

pub(crate) fn assemble_inner(u: &FeFunction, spec: &ProblemSpec, eps: f64, with_grad: bool) -> Result<Assembly> {
    if !(eps >= 0.0) {
        return Err(Error::Precondition(format!("epsilon must be >= 0, got {eps}")));
    }
    let mesh = u.mesh();
    let pw = Powers::new(spec);
    let parts = map_indexed(mesh.n_simplices(), mesh.execution(), |k| element(u, spec, &pw, eps, k, with_grad));

    let sum = |f: fn(&ElementOut) -> f64| pairwise_sum(&parts.iter().map(f).collect::<Vec<_>>());
    let p_part = sum(|e| e.p_part);
    let mu_part = sum(|e| e.mu_part);
    let critical_part = sum(|e| e.critical);
    let singular_part = sum(|e| e.singular);
    let g_part = sum(|e| e.g_part);
    for (name, v) in [
        ("gradient part", p_part + mu_part),
        ("critical part", critical_part),
        ("singular part", singular_part),
        ("g part", g_part),
    ] {
        if !v.is_finite() {
            return Err(Error::NumericalDomain { what: format!("energy {name}"), simplex: None });
        }
    }
    let gradient_part = p_part + mu_part;
    let i2 = critical_part + singular_part + g_part;
    let breakdown = EnergyBreakdown {
        gradient_part,
        p_part,
        mu_part,
        critical_part,
        singular_part,
        g_part,
        total: gradient_part - i2,
        i1: -mu_part + i2,
        i2,
        epsilon: eps,
        lambda: spec.lambda,
    };

    let n = mesh.interior_vertices().len();
    let (mut operator, mut load) = (vec![0.0; n], vec![0.0; n]);
    if with_grad {
        for (k, e) in parts.iter().enumerate() {
            for (j, &v) in mesh.simplex(k).iter().enumerate() {
                if let Some(slot) = mesh.interior_slot(v) {
                    operator[slot] += e.op[j];
                    load[slot] += e.load[j];
                }
            }
        }
        if operator.iter().chain(&load).any(|v| !v.is_finite()) {
            return Err(Error::NumericalDomain { what: "energy gradient".into(), simplex: None });
        }
    }
    let gradient = operator.iter().zip(&load).map(|(a, b)| a - b).collect();
    Ok(Assembly { breakdown, operator, load, gradient })
}

/// J_λ(u) with the singular term regularized by ε ≥ 0 (ε = 0 is exact).
pub fn energy_j(u: &FeFunction, spec: &ProblemSpec, eps: f64) -> Result<EnergyBreakdown> {
    Ok(assemble_inner(u, spec, eps, false)?.breakdown)
}

/// Energy, operator, load and gradient of the ε-regularized discrete
/// energy with respect to the interior coefficients. Requires ε > 0.
pub fn grad_j(u: &FeFunction, spec: &ProblemSpec, eps: f64) -> Result<Assembly> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("grad_J needs epsilon > 0, got {eps}")));
    }
    assemble_inner(u, spec, eps, true)
}

/// ⟨A(u), φ⟩ = ∫ (F^{p−1}(∇u) + μ F^{q−1}(∇u)) ∇F(∇u)·∇φ.
pub fn apply_a(u: &FeFunction, phi: &FeFunction, spec: &ProblemSpec) -> f64 {
    let mesh = u.mesh();
    let pw = Powers::new(spec);
    let d = mesh.dim();
    let parts = map_indexed(mesh.n_simplices(), mesh.execution(), |k| {
        let mut flux = [0.0; 3];
        let mut gphi = [0.0; 3];
        element_flux(u, spec, &pw, k, &mut flux[..d]);
        phi.gradient_on(k, &mut gphi[..d]);
        mesh.volume(k) * flux[..d].iter().zip(&gphi[..d]).map(|(a, b)| a * b).sum::<f64>()
    });
    pairwise_sum(&parts)
}

/// ⟨A(u), φᵢ⟩ for every interior vertex i.
pub fn operator_vector(u: &FeFunction, spec: &ProblemSpec) -> Vec<f64> {
    let mesh = u.mesh();
    let pw = Powers::new(spec);
    let d = mesh.dim();
    let parts = map_indexed(mesh.n_simplices(), mesh.execution(), |k| {
        let mut flux = [0.0; 3];
        element_flux(u, spec, &pw, k, &mut flux[..d]);
        let mut local = [0.0; 4];
        for (j, l) in local.iter_mut().enumerate().take(d + 1) {
            let bg = mesh.basis_gradient(k, j);
            *l = mesh.volume(k) * flux[..d].iter().zip(bg).map(|(a, b)| a * b).sum::<f64>();
        }
        local
    });
    let mut out = vec![0.0; mesh.interior_vertices().len()];
    for (k, local) in parts.iter().enumerate() {
        for (j, &v) in mesh.simplex(k).iter().enumerate() {
            if let Some(slot) = mesh.interior_slot(v) {
                out[slot] += local[j];
            }
        }
    }
    out
}
