//! Projected gradient descent for J_λ on the ball B_σ with
//! ε-continuation of the singular term, and a posteriori verification.

use serde::{Deserialize, Serialize};

use crate::energy::{energy_j, grad_j, nehari_identity_residual, weak_residual, EnergyBreakdown, ProblemSpec};
use crate::error::{Error, Result};
use crate::fespace::{w1p0f_norm, FeFunction};
use crate::minkowski::MinkowskiNorm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Ball radius; when absent the pipeline uses
    /// `sigma_fraction · min(s_max, σ*)`.
    pub sigma: Option<f64>,
    pub sigma_fraction: f64,
    pub epsilon_schedule: Vec<f64>,
    pub max_iterations: usize,
    pub armijo_slope: f64,
    pub backtrack_factor: f64,
    /// Gradient-map tolerance relative to the largest basis load, for all
    /// stages but the last.
    pub gradient_tolerance: f64,
    pub final_gradient_tolerance: f64,
    pub init_tau_scan: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sigma: None,
            sigma_fraction: 0.9,
            epsilon_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8, 1e-10, 1e-12],
            max_iterations: 5000,
            armijo_slope: 1e-4,
            backtrack_factor: 0.5,
            gradient_tolerance: 1e-8,
            final_gradient_tolerance: 1e-11,
            init_tau_scan: vec![1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if let Some(s) = self.sigma {
            if !(s > 0.0) || !s.is_finite() {
                return bad(format!("solver.sigma must be positive, got {s}"));
            }
        }
        if !(self.sigma_fraction > 0.0 && self.sigma_fraction < 1.0) {
            return bad(format!("solver.sigma_fraction must lie in (0, 1), got {}", self.sigma_fraction));
        }
        if self.epsilon_schedule.is_empty()
            || self.epsilon_schedule.iter().any(|e| !(*e > 0.0))
            || self.epsilon_schedule.windows(2).any(|w| !(w[1] < w[0]))
        {
            return bad(format!(
                "solver.epsilon_schedule must be positive and strictly decreasing, got {:?}",
                self.epsilon_schedule
            ));
        }
        if !(self.armijo_slope > 0.0 && self.armijo_slope < 1.0) {
            return bad(format!("solver.armijo_slope must lie in (0, 1), got {}", self.armijo_slope));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad(format!("solver.backtrack_factor must lie in (0, 1), got {}", self.backtrack_factor));
        }
        if !(self.gradient_tolerance > 0.0) || !(self.final_gradient_tolerance > 0.0) {
            return bad("solver gradient tolerances must be positive".into());
        }
        if self.init_tau_scan.is_empty() || self.init_tau_scan.iter().any(|t| !(*t > 0.0)) {
            return bad("solver.init_tau_scan must be a nonempty list of positive values".into());
        }
        if self.max_iterations == 0 {
            return bad("solver.max_iterations must be positive".into());
        }
        Ok(())
    }
}

/// ‖u‖_{1,p,0,F} ≤ σ by radial scaling.
pub fn project_to_ball(u: &FeFunction, sigma: f64, norm: &dyn MinkowskiNorm, p: f64) -> FeFunction {
    let n = w1p0f_norm(u, norm, p);
    if n <= sigma {
        u.clone()
    } else {
        u.scaled(sigma / n)
    }
}

/// Positive bump ∏ sin(π xᵢ / Lᵢ).
pub fn bump(spec: &ProblemSpec) -> FeFunction {
    let mesh = spec.mesh();
    let ext = mesh.extents().to_vec();
    FeFunction::interpolate(mesh.clone(), |x| {
        x.iter().zip(&ext).map(|(t, l)| (std::f64::consts::PI * t / l).sin()).product()
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InitialGuess {
    pub tau: f64,
    pub energy: f64,
    pub warning: Option<String>,
    #[serde(skip)]
    pub u: FeFunction,
}

/// τ·v for the τ in the scan with least J_λ at the first ε stage, each
/// candidate clamped into B_σ.
pub fn initial_guess(spec: &ProblemSpec, config: &SolverConfig, sigma: f64) -> Result<InitialGuess> {
    let v = bump(spec);
    let eps = config.epsilon_schedule[0];
    let mut best: Option<InitialGuess> = None;
    for &tau in &config.init_tau_scan {
        let u = project_to_ball(&v.scaled(tau), sigma, spec.norm.as_ref(), spec.exps.p);
        let energy = energy_j(&u, spec, eps)?.total;
        if best.as_ref().is_none_or(|b| energy < b.energy) {
            best = Some(InitialGuess { tau, energy, warning: None, u });
        }
    }
    let mut best = best.expect("nonempty scan");
    if !(best.energy <= 0.0) {
        let w = format!("no scanned tau gives J <= 0 inside the ball (best J = {:.3e} at tau = {})", best.energy, best.tau);
        log::warn!("{w}");
        best.warning = Some(w);
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub epsilon: f64,
    pub energy: f64,
    pub gradient_map: f64,
    pub min_u: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageSummary {
    pub epsilon: f64,
    pub iterations: usize,
    pub gradient_map: f64,
    pub converged: bool,
    pub stalled: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub sigma: f64,
    pub initial_tau: f64,
    pub initial_energy: f64,
    pub stages: Vec<StageSummary>,
    pub total_iterations: usize,
    /// Gradient-map ∞-norm at the end of the last stage, absolute and
    /// relative to the largest basis load.
    pub gradient_map: f64,
    pub gradient_map_relative: f64,
    /// Energy at ε = 0.
    pub energy: EnergyBreakdown,
    pub min_interior: f64,
    pub norm: f64,
    pub norm_ratio: f64,
    pub verification: Verification,
    pub diagnostics: Vec<String>,
    #[serde(skip)]
    pub solution: FeFunction,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

struct Stage {
    u: FeFunction,
    energy: f64,
    gradient: Vec<f64>,
    max_load: f64,
}

impl Stage {
    fn at(u: FeFunction, spec: &ProblemSpec, eps: f64) -> Result<Self> {
        let asm = grad_j(&u, spec, eps)?;
        Ok(Self { u, energy: asm.breakdown.total, max_load: inf_norm(&asm.load), gradient: asm.gradient })
    }
}

/// Projected gradient descent with Barzilai-Borwein trial steps and
/// Armijo backtracking, for each ε of the schedule in turn.
///
/// A trial step is accepted on sufficient decrease, or, once energy
/// differences are at rounding level, when J does not increase beyond
/// that level and the step stays on the descending side of the line
/// (⟨∇J(u+d), d⟩ ≤ 0).
pub fn minimize(spec: &ProblemSpec, config: &SolverConfig, sigma: f64) -> Result<SolveReport> {
    config.validate()?;
    if !(sigma > 0.0) {
        return Err(Error::Precondition(format!("sigma must be positive, got {sigma}")));
    }
    let mesh = spec.mesh().clone();
    let norm = spec.norm.as_ref();
    let p = spec.exps.p;
    let init = initial_guess(spec, config, sigma)?;
    let mut diagnostics: Vec<String> = init.warning.iter().cloned().collect();
    let mut trace = Vec::new();
    let mut stages = Vec::new();
    let mut iteration = 0;
    let mut u = init.u.clone();
    let mut step = f64::NAN;
    let n_stages = config.epsilon_schedule.len();
    let mut last_map = f64::INFINITY;
    let mut last_rel = f64::INFINITY;

    for (si, &eps) in config.epsilon_schedule.iter().enumerate() {
        let tol = if si + 1 == n_stages { config.final_gradient_tolerance } else { config.gradient_tolerance };
        let mut st = Stage::at(u, spec, eps)?;
        let scale = st.max_load.max(f64::MIN_POSITIVE);
        if !step.is_finite() {
            step = 1.0 / inf_norm(&st.gradient).max(1e-300) * 1e-2 * inf_norm(&st.u.interior_values()).max(1e-12);
        }
        let mut its = 0;
        let mut stalled = false;
        let mut map: f64;
        loop {
            let g_fn = FeFunction::from_interior(mesh.clone(), &st.gradient)?;
            // gradient map at the current step
            let cand = project_to_ball(&st.u.axpy(-step, &g_fn), sigma, norm, p);
            let d: Vec<f64> = cand.interior_values().iter().zip(st.u.interior_values()).map(|(a, b)| a - b).collect();
            map = inf_norm(&d) / step;
            trace.push(TraceRow { iteration, epsilon: eps, energy: st.energy, gradient_map: map, min_u: st.u.min_interior() });
            if map <= tol * scale {
                break;
            }
            if its >= config.max_iterations {
                break;
            }
            let mut t = step;
            let mut accepted = None;
            for _ in 0..80 {
                let trial = project_to_ball(&st.u.axpy(-t, &g_fn), sigma, norm, p);
                let dir: Vec<f64> =
                    trial.interior_values().iter().zip(st.u.interior_values()).map(|(a, b)| a - b).collect();
                let slope: f64 = dir.iter().zip(&st.gradient).map(|(a, b)| a * b).sum();
                if slope >= 0.0 && dir.iter().all(|&x| x == 0.0) {
                    break;
                }
                if let Ok(next) = Stage::at(trial, spec, eps) {
                    let noise = 1e-13 * (st.energy.abs() + 1e-300).max(next.energy.abs());
                    let new_slope: f64 = dir.iter().zip(&next.gradient).map(|(a, b)| a * b).sum();
                    let armijo = next.energy <= st.energy + config.armijo_slope * slope;
                    let flat = next.energy <= st.energy + noise && (st.energy - next.energy).abs() <= noise && new_slope <= 0.0;
                    if armijo || flat {
                        accepted = Some((next, dir, t));
                        break;
                    }
                }
                t *= config.backtrack_factor;
            }
            let Some((next, dir, t)) = accepted else {
                stalled = true;
                break;
            };
            // BB1 step
            let y: Vec<f64> = next.gradient.iter().zip(&st.gradient).map(|(a, b)| a - b).collect();
            let sy: f64 = dir.iter().zip(&y).map(|(a, b)| a * b).sum();
            let ss: f64 = dir.iter().map(|v| v * v).sum();
            step = if sy > 0.0 { ss / sy } else { 2.0 * t };
            st = next;
            its += 1;
            iteration += 1;
        }
        let converged = map <= tol * scale;
        if !converged {
            diagnostics.push(format!(
                "stage eps = {eps:e}: gradient map {map:.3e} above {:.3e} after {its} iterations{}",
                tol * scale,
                if stalled { " (line search stalled)" } else { "" }
            ));
        }
        stages.push(StageSummary { epsilon: eps, iterations: its, gradient_map: map, converged, stalled });
        last_map = map;
        last_rel = map / scale;
        u = st.u;
    }

    let energy = energy_j(&u, spec, 0.0)?;
    let norm_value = w1p0f_norm(&u, norm, p);
    let verification = verify(&u, spec, sigma, &VerifyThresholds::default());
    let min_interior = u.min_interior();
    let last_ok = stages.last().is_some_and(|s| s.converged);
    if !(min_interior > 0.0) {
        diagnostics.push(format!("positivity lost: min interior value {min_interior:.3e}"));
    }
    let converged = last_ok && min_interior > 0.0;
    Ok(SolveReport {
        converged,
        sigma,
        initial_tau: init.tau,
        initial_energy: init.energy,
        total_iterations: iteration,
        stages,
        gradient_map: last_map,
        gradient_map_relative: last_rel,
        energy,
        min_interior,
        norm: norm_value,
        norm_ratio: norm_value / sigma,
        verification,
        diagnostics,
        solution: u,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyThresholds {
    pub interiority_ratio: f64,
    /// Weak residual max relative to the largest basis load.
    pub weak_residual: f64,
    pub nehari_residual: f64,
}

impl Default for VerifyThresholds {
    fn default() -> Self {
        Self { interiority_ratio: 0.999, weak_residual: 1e-6, nehari_residual: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    pub passed: bool,
    pub min_interior: f64,
    pub norm_ratio: f64,
    pub weak_residual_max: f64,
    pub weak_residual_l2: f64,
    pub max_load: f64,
    pub nehari_residual: f64,
    pub energy: f64,
    pub checks: Vec<Check>,
}

/// Positivity, strict interiority, weak and Nehari residuals and the sign
/// of the energy. Quantities that cannot be evaluated are NaN and fail.
pub fn verify(u: &FeFunction, spec: &ProblemSpec, sigma: f64, th: &VerifyThresholds) -> Verification {
    let min_interior = u.min_interior();
    let norm_ratio = w1p0f_norm(u, spec.norm.as_ref(), spec.exps.p) / sigma;
    let (wmax, wl2, load) = match weak_residual(u, spec) {
        Ok(w) => (w.max_abs, w.l2, w.max_load),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN),
    };
    let nehari = nehari_identity_residual(u, spec).unwrap_or(f64::NAN);
    let energy = energy_j(u, spec, 0.0).map(|e| e.total).unwrap_or(f64::NAN);
    let weak_rel = wmax / load;
    let checks = vec![
        Check { name: "positivity", value: min_interior, threshold: 0.0, passed: min_interior > 0.0 },
        Check {
            name: "strict_interiority",
            value: norm_ratio,
            threshold: th.interiority_ratio,
            passed: norm_ratio <= th.interiority_ratio,
        },
        Check { name: "weak_residual", value: weak_rel, threshold: th.weak_residual, passed: weak_rel <= th.weak_residual },
        Check { name: "nehari_residual", value: nehari, threshold: th.nehari_residual, passed: nehari <= th.nehari_residual },
        Check { name: "negative_energy", value: energy, threshold: 0.0, passed: energy < 0.0 },
    ];
    Verification {
        passed: checks.iter().all(|c| c.passed),
        min_interior,
        norm_ratio,
        weak_residual_max: wmax,
        weak_residual_l2: wl2,
        max_load: load,
        nehari_residual: nehari,
        energy,
        checks,
    }
}
