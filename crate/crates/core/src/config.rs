//! Experiment configuration (TOML).

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{hypothesis_checks, HypothesisCheck, Nonlinearity, ProblemSpec};
use crate::error::{Error, Result};
use crate::fespace::{build_mesh, BoxMesh};
use crate::minkowski::{MinkowskiNorm, NormSpec};
use crate::musielak::{Mode, WeightField, WeightSpec};
use crate::solver::{SolverConfig, VerifyThresholds};
use crate::thresholds::{KappaMethod, KappaOptions};

/// The bundled default experiment.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub dim: usize,
    pub extents: Vec<f64>,
    pub subdivisions: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LambdaMode {
    #[serde(rename = "auto-half-lambda-star")]
    AutoHalfLambdaStar,
}

/// λ as a number or `"auto-half-lambda-star"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSetting {
    Value(f64),
    Mode(LambdaMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GConfig {
    pub a1: f64,
    pub a2: f64,
    pub nu: f64,
    pub theta: f64,
    /// Declared growth constants; default to a1 and a2.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

impl GConfig {
    pub fn nonlinearity(&self) -> Nonlinearity {
        Nonlinearity { c1: self.c1.unwrap_or(self.a1), c2: self.c2.unwrap_or(self.a2), ..Nonlinearity::new(self.a1, self.a2, self.nu, self.theta) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub c: f64,
    pub lambda: LambdaSetting,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    pub g: GConfig,
    pub mu: WeightSpec,
}

fn default_quad_order() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub kappa_method: KappaMethod,
    pub kappa_inflation: f64,
    pub lf_resolution: f64,
    pub kappa: KappaOptions,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            kappa_method: KappaMethod::DiscreteRayleigh,
            kappa_inflation: 1.25,
            lf_resolution: 0.1,
            kappa: KappaOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub mesh: MeshConfig,
    pub norm: NormSpec,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub thresholds: ThresholdConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifyThresholds,
}

fn default_output_dir() -> String {
    "out".into()
}

/// Per-hypothesis pass/fail lines.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub mode: Mode,
    pub checks: Vec<HypothesisCheck>,
    pub passed: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn bundled_default() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG).expect("bundled config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks that do not need the mesh or thresholds.
    fn check(&self) -> Result<()> {
        if let LambdaSetting::Value(l) = self.problem.lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::Config(format!("problem.lambda must be >= 0, got {l}")));
            }
        }
        if self.problem.quad_order == 0 {
            return Err(Error::Config("problem.quad_order must be at least 1".into()));
        }
        if !(self.thresholds.kappa_inflation >= 1.0) {
            return Err(Error::Config(format!(
                "thresholds.kappa_inflation must be >= 1, got {}",
                self.thresholds.kappa_inflation
            )));
        }
        if !(self.thresholds.lf_resolution > 0.0) {
            return Err(Error::Config(format!(
                "thresholds.lf_resolution must be positive, got {}",
                self.thresholds.lf_resolution
            )));
        }
        if self.thresholds.kappa_method == KappaMethod::TalentiReference && self.norm != NormSpec::Euclidean {
            return Err(Error::Config("thresholds.kappa_method = \"talenti-reference\" needs the euclidean norm".into()));
        }
        self.solver.validate()
    }

    pub fn build_mesh(&self) -> Result<Arc<BoxMesh>> {
        Ok(Arc::new(build_mesh(self.mesh.dim, &self.mesh.extents, &self.mesh.subdivisions)?))
    }

    pub fn build_norm(&self) -> Result<Arc<dyn MinkowskiNorm>> {
        Ok(Arc::new(self.norm.build(self.mesh.dim)?))
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.problem.g.nonlinearity()
    }

    /// ProblemSpec at the given λ. Strict mode turns hypothesis violations
    /// into configuration errors.
    pub fn problem_spec(&self, mesh: &Arc<BoxMesh>, lambda: f64, mode: Mode) -> Result<(ProblemSpec, Vec<String>)> {
        let pr = &self.problem;
        let mu = WeightField::from_spec(mesh.clone(), &pr.mu)?;
        ProblemSpec::new(pr.p, pr.q, pr.gamma, pr.c, lambda, mu, self.nonlinearity(), self.build_norm()?, pr.quad_order, mode)
    }

    /// Hypothesis checklist. λ is checked only when given as a number.
    pub fn validate_hypotheses(&self, mode: Mode) -> Result<HypothesisReport> {
        let mesh = self.build_mesh()?;
        let mu = WeightField::from_spec(mesh, &self.problem.mu)?;
        let mu_min = mu.values().iter().copied().fold(f64::INFINITY, f64::min);
        let pr = &self.problem;
        let lambda = match pr.lambda {
            LambdaSetting::Value(l) => l,
            LambdaSetting::Mode(_) => 1.0,
        };
        let mut checks =
            hypothesis_checks(pr.p, pr.q, self.mesh.dim, pr.gamma, pr.c, lambda, &self.nonlinearity(), mu_min);
        if let LambdaSetting::Mode(_) = pr.lambda {
            if let Some(c) = checks.iter_mut().find(|c| c.name == "lambda") {
                c.detail = "lambda = lambda*/2, positive when lambda* is".into();
            }
        }
        let passed = checks.iter().all(|c| c.passed);
        Ok(HypothesisReport { mode, checks, passed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_default_parses() {
        let cfg = ExperimentConfig::bundled_default();
        assert_eq!(cfg.mesh.subdivisions, vec![8, 8, 8]);
        assert_eq!(cfg.problem.lambda, LambdaSetting::Mode(LambdaMode::AutoHalfLambdaStar));
        assert!(cfg.validate_hypotheses(Mode::Strict).unwrap().passed);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn numeric_lambda_and_missing_sections() {
        let text = DEFAULT_CONFIG.replace("lambda = \"auto-half-lambda-star\"", "lambda = 0.25");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.problem.lambda, LambdaSetting::Value(0.25));
        let no_mesh: String = DEFAULT_CONFIG
            .lines()
            .filter(|l| !l.starts_with("[mesh]") && !l.starts_with("dim") && !l.starts_with("extents") && !l.starts_with("subdivisions"))
            .collect::<Vec<_>>()
            .join("\n");
        let err = ExperimentConfig::from_toml_str(&no_mesh).unwrap_err();
        assert!(err.is_config() && err.to_string().contains("mesh"), "{err}");
        let bad = DEFAULT_CONFIG.replace("lambda = \"auto-half-lambda-star\"", "lambda = \"half\"");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn hypothesis_failures_are_named() {
        let text = DEFAULT_CONFIG.replace("q = 2.5", "q = 2.8");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let rep = cfg.validate_hypotheses(Mode::Strict).unwrap();
        assert!(!rep.passed);
        assert!(rep.checks.iter().any(|c| c.name == "H(i).ratio" && !c.passed));
        let text = DEFAULT_CONFIG.replace("gamma = 0.5", "gamma = 1.0");
        let rep = ExperimentConfig::from_toml_str(&text).unwrap().validate_hypotheses(Mode::Strict).unwrap();
        assert!(rep.checks.iter().any(|c| c.statement == "0 < gamma < 1" && !c.passed));
    }
}
