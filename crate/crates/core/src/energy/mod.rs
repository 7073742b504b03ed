//! The energy J_λ, the Finsler double phase operator A and the residuals
//! used to verify computed solutions.

mod assembly;
mod residual;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fespace::QuadratureRule;
use crate::minkowski::MinkowskiNorm;
use crate::musielak::{DoublePhaseExponents, Mode, WeightField};

pub use assembly::{apply_a, energy_j, grad_j, operator_vector, Assembly, EnergyBreakdown};
pub use residual::{monotonicity_check, nehari_identity_residual, nehari_residual_unchecked, weak_residual, WeakResidual};

/// x ↦ x^e for x ≥ 0, with fast paths for integer and half-integer e.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Power {
    Int(i32),
    Half(i32),
    General(f64),
}

impl Power {
    pub(crate) fn new(e: f64) -> Self {
        if e == e.round() && e.abs() < 64.0 {
            Power::Int(e as i32)
        } else if (2.0 * e) == (2.0 * e).round() && e.abs() < 64.0 {
            Power::Half((e - 0.5).round() as i32)
        } else {
            Power::General(e)
        }
    }

    #[inline]
    pub(crate) fn of(self, x: f64) -> f64 {
        match self {
            Power::Int(k) => x.powi(k),
            Power::Half(k) => x.powi(k) * x.sqrt(),
            Power::General(e) => x.powf(e),
        }
    }
}

/// g(s) = a₁ s^{ν−1} + a₂ s^{θ−1} for s > 0 and 0 otherwise, with the
/// declared growth constants (c₁, c₂) bounding (a₁, a₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub a1: f64,
    pub a2: f64,
    pub nu: f64,
    pub theta: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Nonlinearity {
    /// Growth constants equal to the coefficients.
    pub fn new(a1: f64, a2: f64, nu: f64, theta: f64) -> Self {
        Self { a1, a2, nu, theta, c1: a1, c2: a2 }
    }

    pub fn g(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        self.a1 * s.powf(self.nu - 1.0) + self.a2 * s.powf(self.theta - 1.0)
    }

    /// G(s) = ∫₀^s g.
    pub fn big_g(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        self.a1 * s.powf(self.nu) / self.nu + self.a2 * s.powf(self.theta) / self.theta
    }
}

/// One line of the hypothesis checklist.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub statement: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Evaluates the structural hypotheses on the problem data.
pub fn hypothesis_checks(
    p: f64,
    q: f64,
    dim: usize,
    gamma: f64,
    c: f64,
    lambda: f64,
    g: &Nonlinearity,
    mu_min: f64,
) -> Vec<HypothesisCheck> {
    let n = dim as f64;
    let p_star = if p < n { n * p / (n - p) } else { f64::INFINITY };
    let check = |name, statement, passed, detail: String| HypothesisCheck { name, statement, passed, detail };
    vec![
        check("H(i).gamma", "0 < gamma < 1", gamma > 0.0 && gamma < 1.0, format!("gamma = {gamma}")),
        check("H(i).c", "c > 0", c > 0.0, format!("c = {c}")),
        check("H(i).pq", "2 <= p < q < N", 2.0 <= p && p < q && q < n, format!("p = {p}, q = {q}, N = {dim}")),
        check("H(i).ratio", "q/p < 1 + 1/N", q / p < 1.0 + 1.0 / n, format!("q/p = {:.6}, 1 + 1/N = {:.6}", q / p, 1.0 + 1.0 / n)),
        check("H(i).mu", "0 <= mu(x)", mu_min >= 0.0, format!("min mu = {mu_min}")),
        check(
            "H(ii).exponents",
            "1 < theta < p <= nu < p*",
            1.0 < g.theta && g.theta < p && p <= g.nu && g.nu < p_star,
            format!("theta = {}, p = {p}, nu = {}, p* = {p_star}", g.theta, g.nu),
        ),
        check(
            "H(ii).growth",
            "g(s) <= c1 s^(nu-1) + c2 s^(theta-1)",
            g.a1 >= 0.0 && g.a2 >= 0.0 && g.a1 <= g.c1 && g.a2 <= g.c2,
            format!("a1 = {} <= c1 = {}, a2 = {} <= c2 = {}", g.a1, g.c1, g.a2, g.c2),
        ),
        check("lambda", "lambda > 0", lambda > 0.0, format!("lambda = {lambda}")),
    ]
}

/// Problem data: exponents, singular term, parameter λ, weight μ,
/// nonlinearity g, the norm F and the quadrature rule for zero-order terms.
#[derive(Clone)]
pub struct ProblemSpec {
    pub exps: DoublePhaseExponents,
    pub gamma: f64,
    pub c: f64,
    pub lambda: f64,
    pub mu: WeightField,
    pub g: Nonlinearity,
    pub norm: Arc<dyn MinkowskiNorm>,
    pub rule: QuadratureRule,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("exps", &self.exps)
            .field("gamma", &self.gamma)
            .field("c", &self.c)
            .field("lambda", &self.lambda)
            .field("g", &self.g)
            .field("norm", &self.norm.label())
            .field("quad_order", &self.rule.order())
            .finish()
    }
}

impl ProblemSpec {
    /// Validates the data. Hypothesis failures are errors in strict mode
    /// and returned as warnings in relaxed mode; values that make the
    /// energy meaningless (γ ≤ 0, negative coefficients) always fail.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: f64,
        q: f64,
        gamma: f64,
        c: f64,
        lambda: f64,
        mu: WeightField,
        g: Nonlinearity,
        norm: Arc<dyn MinkowskiNorm>,
        quad_order: usize,
        mode: Mode,
    ) -> Result<(Self, Vec<String>)> {
        let dim = mu.mesh().dim();
        if norm.dim() != dim {
            return Err(Error::Config(format!("norm dimension {} differs from mesh dimension {dim}", norm.dim())));
        }
        if !(gamma > 0.0) || !(c >= 0.0) || !(lambda >= 0.0) || !(g.a1 >= 0.0) || !(g.a2 >= 0.0) {
            return Err(Error::Config(format!(
                "need gamma > 0 and c, lambda, a1, a2 >= 0 (gamma = {gamma}, c = {c}, lambda = {lambda}, a1 = {}, a2 = {})",
                g.a1, g.a2
            )));
        }
        if !(g.nu > 1.0) || !(g.theta > 1.0) {
            return Err(Error::Config(format!("nu and theta must exceed 1, got {} and {}", g.nu, g.theta)));
        }
        let (exps, _) = DoublePhaseExponents::new(p, q, dim, Mode::Relaxed)?;
        let mu_min = mu.values().iter().copied().fold(f64::INFINITY, f64::min);
        let failed: Vec<String> = hypothesis_checks(p, q, dim, gamma, c, lambda, &g, mu_min)
            .into_iter()
            .filter(|h| !h.passed && h.name != "lambda")
            .map(|h| format!("{} [{}]: {}", h.name, h.statement, h.detail))
            .collect();
        if mode == Mode::Strict && !failed.is_empty() {
            return Err(Error::Config(format!("hypotheses violated: {}", failed.join("; "))));
        }
        for w in &failed {
            log::warn!("relaxed mode: {w}");
        }
        let rule = QuadratureRule::new(dim, quad_order)?;
        Ok((Self { exps, gamma, c, lambda, mu, g, norm, rule }, failed))
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    pub fn mesh(&self) -> &Arc<crate::fespace::BoxMesh> {
        self.mu.mesh()
    }
}
