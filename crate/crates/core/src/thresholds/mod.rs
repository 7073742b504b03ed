//! Threshold constants: κ_{p*}, σ*, Λ(s), s_max and λ*.

mod kappa;

use serde::{Deserialize, Serialize};

use crate::energy::Nonlinearity;
use crate::error::{Error, Result};

pub use kappa::{
    estimate_kappa, estimate_kappa_from, kappa_starts, talenti_constant, KappaEstimate, KappaMethod, KappaOptions,
};

/// σ* = ((p*/p) · l_F^{p/2} / (2^{p−1} κ^{p*}))^{1/(p*−p)}.
pub fn sigma_star(p: f64, p_star: f64, l_f: f64, kappa: f64) -> Result<f64> {
    if !(p > 0.0) || !(p_star > p) || !(l_f > 0.0) || !(kappa > 0.0) {
        return Err(Error::Precondition(format!(
            "sigma* needs positive inputs and p* > p (p = {p}, p* = {p_star}, l_F = {l_f}, kappa = {kappa})"
        )));
    }
    let inner = (p_star / p) * l_f.powf(p / 2.0) / (2f64.powf(p - 1.0) * kappa.powf(p_star));
    Ok(inner.powf(1.0 / (p_star - p)))
}

/// Parameters of Λ(s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaParams {
    pub kappa: f64,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
    pub nu: f64,
    pub theta: f64,
    pub p: f64,
    pub p_star: f64,
    pub volume: f64,
}

impl LambdaParams {
    pub fn new(kappa: f64, c: f64, g: &Nonlinearity, gamma: f64, p: f64, p_star: f64, volume: f64) -> Self {
        Self { kappa, c, c1: g.c1, c2: g.c2, gamma, nu: g.nu, theta: g.theta, p, p_star, volume }
    }
}

/// Λ(s) = (s^{p−γ} − κ^{p*}s^{p*−γ} − cκ^γ|Ω|^{(p*−γ)/p*})
///      / (c₁κ^ν|Ω|^{(p*−ν)/p*}s^{ν−γ} + c₂κ^θ|Ω|^{(p*−θ)/p*}s^{θ−γ}).
pub fn lambda_capital(s: f64, lp: &LambdaParams) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Precondition(format!("Lambda(s) needs s > 0, got {s}")));
    }
    if !(lp.c1 + lp.c2 > 0.0) || lp.c1 < 0.0 || lp.c2 < 0.0 {
        return Err(Error::ParameterRegime(format!(
            "Lambda has a degenerate denominator for c1 = {}, c2 = {}",
            lp.c1, lp.c2
        )));
    }
    let LambdaParams { kappa, c, c1, c2, gamma, nu, theta, p, p_star, volume } = *lp;
    let num = s.powf(p - gamma) - kappa.powf(p_star) * s.powf(p_star - gamma)
        - c * kappa.powf(gamma) * volume.powf((p_star - gamma) / p_star);
    let den = c1 * kappa.powf(nu) * volume.powf((p_star - nu) / p_star) * s.powf(nu - gamma)
        + c2 * kappa.powf(theta) * volume.powf((p_star - theta) / p_star) * s.powf(theta - gamma);
    Ok(num / den)
}

/// Log-spaced scan of Λ over [1e-8, 1e8].
pub fn lambda_scan(lp: &LambdaParams, per_decade: usize) -> Result<Vec<(f64, f64)>> {
    let n = 16 * per_decade;
    (0..=n)
        .map(|i| {
            let s = 10f64.powf(-8.0 + 16.0 * i as f64 / n as f64);
            Ok((s, lambda_capital(s, lp)?))
        })
        .collect()
}

/// Maximizer of Λ with its value, and the grid intervals where Λ changes
/// sign around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SMax {
    pub s_max: f64,
    pub lambda_at_smax: f64,
    /// Grid interval containing the lower zero of Λ, if any.
    pub lower_root_bracket: Option<(f64, f64)>,
    /// Grid interval containing the upper zero s₀ of Λ.
    pub upper_root_bracket: Option<(f64, f64)>,
}

/// Log-grid scan over [1e-8, 1e8] followed by golden-section search in
/// log s to relative tolerance 1e-10.
pub fn find_smax(lp: &LambdaParams) -> Result<SMax> {
    let grid = lambda_scan(lp, 100)?;
    let values: Vec<f64> = grid.iter().map(|(_, v)| -v).collect();
    let i = crate::par::argmin(&values).ok_or_else(|| Error::Numerical("Lambda is NaN on the whole grid".into()))?;
    if !(grid[i].1 > 0.0) {
        let sample: Vec<String> = grid.iter().step_by(100).map(|(s, v)| format!("Lambda({s:.1e}) = {v:.3e}")).collect();
        return Err(Error::ParameterRegime(format!(
            "Lambda(s) <= 0 on the scanned grid s in [1e-8, 1e8]: {}",
            sample.join(", ")
        )));
    }
    let f = |t: f64| lambda_capital(t.exp(), lp).unwrap_or(f64::NEG_INFINITY);
    let mut a = grid[i.saturating_sub(1)].0.ln();
    let mut b = grid[(i + 1).min(grid.len() - 1)].0.ln();
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-10 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    let mut s_max = (0.5 * (a + b)).exp();
    let mut best = lambda_capital(s_max, lp)?;
    if grid[i].1 > best {
        s_max = grid[i].0;
        best = grid[i].1;
    }
    let lower = grid[..=i].windows(2).rev().find(|w| w[0].1 <= 0.0 && w[1].1 > 0.0).map(|w| (w[0].0, w[1].0));
    let upper = grid[i..].windows(2).find(|w| w[0].1 > 0.0 && w[1].1 <= 0.0).map(|w| (w[0].0, w[1].0));
    Ok(SMax { s_max, lambda_at_smax: best, lower_root_bracket: lower, upper_root_bracket: upper })
}

/// Which argument realized min(s_max, σ*).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaStarAt {
    SMax,
    SigmaStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaStar {
    pub value: f64,
    pub at: LambdaStarAt,
    pub s: f64,
    /// Set when λ* ≤ 0, so that no admissible λ exists.
    pub regime_warning: bool,
}

/// λ* = Λ(min(s_max, σ*)).
pub fn lambda_star(lp: &LambdaParams, sigma_star: f64, s_max: f64) -> Result<LambdaStar> {
    let (s, at) = if s_max <= sigma_star { (s_max, LambdaStarAt::SMax) } else { (sigma_star, LambdaStarAt::SigmaStar) };
    let value = lambda_capital(s, lp)?;
    let regime_warning = !(value > 0.0);
    if regime_warning {
        log::warn!("lambda* = {value} <= 0: the admissible interval (0, lambda*) is empty");
    }
    Ok(LambdaStar { value, at, s, regime_warning })
}

/// All threshold quantities for one problem.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub kappa: f64,
    pub kappa_method: KappaMethod,
    pub kappa_inflation: f64,
    pub kappa_used: f64,
    pub kappa_converged: bool,
    pub l_f: f64,
    pub p: f64,
    pub p_star: f64,
    pub sigma_star: f64,
    pub s_max: f64,
    pub lambda_at_smax: f64,
    pub lambda_star: f64,
    pub lambda_star_at: LambdaStarAt,
    pub s0_bracket: Option<(f64, f64)>,
    pub domain_volume: f64,
    pub lambda_params: LambdaParams,
    pub regime_warning: bool,
}

impl ThresholdReport {
    /// Builds the report from κ (before inflation) and l_F.
    pub fn compute(
        kappa: f64,
        kappa_method: KappaMethod,
        kappa_inflation: f64,
        kappa_converged: bool,
        l_f: f64,
        lp_base: LambdaParams,
    ) -> Result<Self> {
        if !(kappa_inflation >= 1.0) {
            return Err(Error::Config(format!("kappa inflation must be >= 1, got {kappa_inflation}")));
        }
        let kappa_used = kappa * kappa_inflation;
        let lp = LambdaParams { kappa: kappa_used, ..lp_base };
        let sigma = sigma_star(lp.p, lp.p_star, l_f, kappa_used)?;
        let sm = find_smax(&lp)?;
        let ls = lambda_star(&lp, sigma, sm.s_max)?;
        let report = Self {
            kappa,
            kappa_method,
            kappa_inflation,
            kappa_used,
            kappa_converged,
            l_f,
            p: lp.p,
            p_star: lp.p_star,
            sigma_star: sigma,
            s_max: sm.s_max,
            lambda_at_smax: sm.lambda_at_smax,
            lambda_star: ls.value,
            lambda_star_at: ls.at,
            s0_bracket: sm.upper_root_bracket,
            domain_volume: lp.volume,
            lambda_params: lp,
            regime_warning: ls.regime_warning,
        };
        report.check_consistency()?;
        Ok(report)
    }

    /// Positivity of all entries, the σ* formula and λ* = Λ(min(s_max, σ*)),
    /// each to 1e-12 relative.
    pub fn check_consistency(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::Numerical(format!("threshold report inconsistent: {what}")));
        for (name, v) in [
            ("kappa", self.kappa),
            ("l_F", self.l_f),
            ("sigma*", self.sigma_star),
            ("s_max", self.s_max),
            ("lambda*", self.lambda_star),
            ("volume", self.domain_volume),
        ] {
            if !(v > 0.0) {
                return fail(&format!("{name} = {v} is not positive"));
            }
        }
        let sigma = sigma_star(self.p, self.p_star, self.l_f, self.kappa_used)?;
        if (sigma - self.sigma_star).abs() > 1e-12 * sigma {
            return fail("sigma* formula");
        }
        let lam = lambda_capital(self.s_max.min(self.sigma_star), &self.lambda_params)?;
        if (lam - self.lambda_star).abs() > 1e-12 * lam.abs() {
            return fail("lambda* = Lambda(min(s_max, sigma*))");
        }
        Ok(())
    }
}
