use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::energy::Power;
use crate::error::{Error, Result};
use crate::fespace::{BoxMesh, FeFunction, QuadratureRule};
use crate::minkowski::MinkowskiNorm;
use crate::par::{map_indexed, pairwise_sum};

/// How κ_{p*} is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaMethod {
    #[default]
    DiscreteRayleigh,
    TalentiReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KappaOptions {
    pub iterations: usize,
    /// Stop when ‖∇L‖_∞ ‖u‖_∞ falls below this, L the log quotient.
    pub tolerance: f64,
    pub random_starts: usize,
    pub seed: u64,
}

impl Default for KappaOptions {
    fn default() -> Self {
        Self { iterations: 3000, tolerance: 1e-9, random_starts: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaEstimate {
    /// Largest ‖u‖_{p*} / ‖u‖_{1,p,0,F} found.
    pub value: f64,
    pub converged: bool,
    pub best_start: usize,
    pub iterations: usize,
    #[serde(skip)]
    pub maximizer: Vec<f64>,
}

/// Sharp constant C in ‖u‖_{p*} ≤ C ‖∇u‖_p on ℝ^N (Euclidean gradient).
pub fn talenti_constant(dim: usize, p: f64) -> Result<f64> {
    let n = dim as f64;
    if !(p > 1.0 && p < n) {
        return Err(Error::OutOfRange { what: "p", value: p, expected: "1 < p < N" });
    }
    let ratio = gamma(1.0 + n / 2.0) * gamma(n) / (gamma(n / p) * gamma(1.0 + n - n / p));
    Ok(std::f64::consts::PI.powf(-0.5) * n.powf(-1.0 / p) * ((p - 1.0) / (n - p)).powf(1.0 - 1.0 / p) * ratio.powf(1.0 / n))
}

struct Quotient<'a> {
    mesh: &'a Arc<BoxMesh>,
    norm: &'a dyn MinkowskiNorm,
    p: f64,
    p_star: f64,
    rule: QuadratureRule,
}

impl Quotient<'_> {
    /// L(u) = log ‖u‖_{p*} − log ‖F(∇u)‖_p and its gradient over interior
    /// coefficients.
    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mesh = self.mesh;
        let u = FeFunction::from_interior(mesh.clone(), x)?;
        let d = mesh.dim();
        let (p, ps) = (self.p, self.p_star);
        let (pw_p, pw_p1) = (Power::new(p), Power::new(p - 1.0));
        let (pw_s, pw_s2) = (Power::new(ps), Power::new(ps - 2.0));
        let parts = map_indexed(mesh.n_simplices(), mesh.execution(), |k| {
            let mut g = [0.0; 3];
            let mut grad_f = [0.0; 3];
            u.gradient_on(k, &mut g[..d]);
            let vol = mesh.volume(k);
            let mut n_loc = [0.0; 4];
            let mut d_loc = [0.0; 4];
            let mut n_val = 0.0;
            if g[..d].iter().any(|&v| v != 0.0) {
                let f = self.norm.value(&g[..d]);
                self.norm.gradient(&g[..d], &mut grad_f[..d]);
                n_val = vol * pw_p.of(f);
                let coef = vol * p * pw_p1.of(f);
                for (j, nl) in n_loc.iter_mut().enumerate().take(d + 1) {
                    let bg = mesh.basis_gradient(k, j);
                    *nl = coef * grad_f[..d].iter().zip(bg).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            let mut d_val = 0.0;
            for (bary, w) in self.rule.points().iter().zip(self.rule.unit_weights()) {
                let v = u.value_on(k, bary);
                let a = v.abs();
                if a == 0.0 {
                    continue;
                }
                d_val += w * pw_s.of(a);
                let dv = ps * pw_s2.of(a) * v;
                for j in 0..=d {
                    d_loc[j] += w * dv * bary[j];
                }
            }
            d_loc.iter_mut().for_each(|x| *x *= vol);
            (n_val, vol * d_val, n_loc, d_loc)
        });
        let n_total = pairwise_sum(&parts.iter().map(|e| e.0).collect::<Vec<_>>());
        let d_total = pairwise_sum(&parts.iter().map(|e| e.1).collect::<Vec<_>>());
        if !(n_total > 0.0) || !(d_total > 0.0) {
            return Err(Error::Numerical("Rayleigh quotient of a zero function".into()));
        }
        let mut grad = vec![0.0; x.len()];
        for (k, e) in parts.iter().enumerate() {
            for (j, &v) in mesh.simplex(k).iter().enumerate() {
                if let Some(slot) = mesh.interior_slot(v) {
                    grad[slot] += e.3[j] / (ps * d_total) - e.2[j] / (p * n_total);
                }
            }
        }
        let l = d_total.ln() / ps - n_total.ln() / p;
        if !l.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NumericalDomain { what: "Rayleigh quotient".into(), simplex: None });
        }
        Ok((l, grad))
    }

    /// Gradient ascent on L with Barzilai-Borwein steps and backtracking,
    /// renormalizing to ‖x‖_∞ = 1 after each step.
    fn ascend(&self, start: &[f64], opts: &KappaOptions) -> Result<(f64, Vec<f64>, usize, bool)> {
        let mut x = normalized(start)?;
        let (mut l, mut g) = self.eval(&x)?;
        let mut step = 1.0 / inf_norm(&g).max(1e-300) * 1e-2;
        for it in 0..opts.iterations {
            if inf_norm(&g) <= opts.tolerance {
                return Ok((l, x, it, true));
            }
            let gg: f64 = g.iter().map(|v| v * v).sum();
            let mut t = step;
            let (x_new, l_new, g_new) = loop {
                let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + t * b).collect();
                if let Ok(trial) = normalized(&trial) {
                    if let Ok((lt, gt)) = self.eval(&trial) {
                        if lt >= l + 1e-4 * t * gg {
                            break (trial, lt, gt);
                        }
                    }
                }
                t *= 0.5;
                if t < 1e-20 * step.max(1.0) || t == 0.0 {
                    return Ok((l, x, it, false));
                }
            };
            // BB1 step from the unnormalized displacement
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            let ss: f64 = s.iter().map(|v| v * v).sum();
            step = if sy < 0.0 { ss / -sy } else { 2.0 * t };
            x = x_new;
            l = l_new;
            g = g_new;
        }
        let done = inf_norm(&g) <= opts.tolerance;
        Ok((l, x, opts.iterations, done))
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn normalized(x: &[f64]) -> Result<Vec<f64>> {
    let m = inf_norm(x);
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Numerical("degenerate Rayleigh iterate".into()));
    }
    Ok(x.iter().map(|v| v / m).collect())
}

/// Start functions: the centred bump followed by seeded random positive
/// vectors.
pub fn kappa_starts(mesh: &Arc<BoxMesh>, opts: &KappaOptions) -> Vec<Vec<f64>> {
    let ext = mesh.extents().to_vec();
    let bump = FeFunction::interpolate(mesh.clone(), |x| {
        x.iter().zip(&ext).map(|(t, l)| (std::f64::consts::PI * t / l).sin()).product()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = mesh.interior_vertices().len();
    let mut starts = vec![bump.interior_values()];
    starts.extend((0..opts.random_starts).map(|_| (0..n).map(|_| rng.random_range(0.05..1.0)).collect()));
    starts
}

/// κ_{p*} estimate: sup of ‖u‖_{p*} / ‖u‖_{1,p,0,F} over the discrete
/// space, maximized from the bump and the seeded random starts.
pub fn estimate_kappa(
    mesh: &Arc<BoxMesh>,
    norm: &dyn MinkowskiNorm,
    p: f64,
    p_star: f64,
    opts: &KappaOptions,
) -> Result<KappaEstimate> {
    estimate_kappa_from(mesh, norm, p, p_star, &kappa_starts(mesh, opts), opts)
}

/// As [`estimate_kappa`] with explicit start vectors over interior vertices.
pub fn estimate_kappa_from(
    mesh: &Arc<BoxMesh>,
    norm: &dyn MinkowskiNorm,
    p: f64,
    p_star: f64,
    starts: &[Vec<f64>],
    opts: &KappaOptions,
) -> Result<KappaEstimate> {
    if !(p > 1.0) || !(p_star > p) || !p_star.is_finite() {
        return Err(Error::Precondition(format!("need 1 < p < p* < inf, got p = {p}, p* = {p_star}")));
    }
    if norm.dim() != mesh.dim() {
        return Err(Error::InvalidInput("norm and mesh dimensions differ".into()));
    }
    if mesh.interior_vertices().is_empty() {
        return Err(Error::InvalidInput("mesh has no interior vertices".into()));
    }
    if starts.is_empty() {
        return Err(Error::InvalidInput("no start vectors".into()));
    }
    let order = (p_star.ceil() as usize).clamp(1, 8);
    let q = Quotient { mesh, norm, p, p_star, rule: QuadratureRule::new(mesh.dim(), order)? };
    let runs = map_indexed(starts.len(), mesh.execution(), |i| q.ascend(&starts[i], opts));
    let runs: Vec<_> = runs.into_iter().collect::<Result<_>>()?;
    for (i, r) in runs.iter().enumerate() {
        log::debug!("kappa start {i}: value {:.12} after {} iterations (converged: {})", r.0.exp(), r.2, r.3);
    }
    let values: Vec<f64> = runs.iter().map(|r| -r.0).collect();
    let best = crate::par::argmin(&values).ok_or_else(|| Error::Numerical("no Rayleigh run finished".into()))?;
    let (l, x, iterations, converged) = runs.into_iter().nth(best).unwrap();
    if !converged {
        log::warn!("kappa estimate: best start {best} hit the iteration cap, returning best-so-far");
    }
    Ok(KappaEstimate { value: l.exp(), converged, best_start: best, iterations, maximizer: x })
}
