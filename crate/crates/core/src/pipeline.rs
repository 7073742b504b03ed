//! Stages of an experiment run and the files they emit.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, HypothesisReport, LambdaSetting};
use crate::energy::ProblemSpec;
use crate::error::{Error, Result};
use crate::fespace::{read_csv, write_csv, write_vtk, BoxMesh, FeFunction};
use crate::minkowski::{check_consistency, uniformity_constant, MinkowskiNorm, NormDiagnostics, UniformityEstimate};
use crate::musielak::Mode;
use crate::solver::{minimize, verify, SolveReport, Verification};
use crate::thresholds::{
    estimate_kappa, lambda_scan, talenti_constant, KappaEstimate, KappaMethod, KappaOptions, LambdaParams,
    ThresholdReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() || matches!(err, Error::Io(_)) {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}

const NORM_CHECK_SAMPLES: usize = 1000;

/// Output directory that records a SHA-256 for every file written.
pub struct Outputs {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

impl Outputs {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Self { root, files: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.root.join(name), bytes)?;
        self.files.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    /// Writes `manifest.json` listing every other file with its hash.
    pub fn finish(mut self) -> Result<Vec<ManifestEntry>> {
        let entries: Vec<ManifestEntry> = self
            .files
            .iter()
            .map(|(file, sha256)| {
                let bytes = std::fs::metadata(self.root.join(file)).map(|m| m.len() as usize).unwrap_or(0);
                ManifestEntry { file: file.clone(), sha256: sha256.clone(), bytes }
            })
            .collect();
        let text = serde_json::to_string_pretty(&serde_json::json!({ "files": entries })).unwrap() + "\n";
        std::fs::write(self.root.join("manifest.json"), text)?;
        self.files.clear();
        Ok(entries)
    }
}

/// Status line of one pipeline stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageStatus {
    pub stage: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// A configured experiment: mesh, norm and mode resolved from the config.
pub struct Session {
    pub config: ExperimentConfig,
    pub mode: Mode,
    pub mesh: Arc<BoxMesh>,
    pub norm: Arc<dyn MinkowskiNorm>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaReport {
    pub method: KappaMethod,
    pub value: f64,
    pub converged: bool,
    pub estimate: Option<KappaEstimate>,
}

impl Session {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let mode = config.mode;
        let mesh = config.build_mesh()?;
        let norm = config.build_norm()?;
        Ok(Self { config, mode, mesh, norm, warnings: Vec::new() })
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self.config.mode = mode;
        self
    }

    /// Hypothesis checklist; in strict mode a failure is a config error.
    pub fn validate(&mut self) -> Result<HypothesisReport> {
        let rep = self.config.validate_hypotheses(self.mode)?;
        let failed: Vec<String> =
            rep.checks.iter().filter(|c| !c.passed).map(|c| format!("{} [{}]: {}", c.name, c.statement, c.detail)).collect();
        if !failed.is_empty() {
            if self.mode == Mode::Strict {
                return Err(Error::Config(format!("hypotheses violated: {}", failed.join("; "))));
            }
            for f in failed {
                log::warn!("relaxed mode: {f}");
                self.warnings.push(format!("hypothesis violated (relaxed mode): {f}"));
            }
        }
        Ok(rep)
    }

    pub fn norm_check(&self) -> NormDiagnostics {
        check_consistency(self.norm.as_ref(), NORM_CHECK_SAMPLES, self.config.seed)
    }

    pub fn lf(&self) -> Result<UniformityEstimate> {
        uniformity_constant(self.norm.as_ref(), self.config.thresholds.lf_resolution)
    }

    fn p_star(&self) -> Result<f64> {
        let (p, n) = (self.config.problem.p, self.mesh.dim() as f64);
        if !(p < n) {
            return Err(Error::Config(format!("p = {p} must be below N = {n}")));
        }
        Ok(n * p / (n - p))
    }

    pub fn kappa(&self) -> Result<KappaReport> {
        let th = &self.config.thresholds;
        let p = self.config.problem.p;
        match th.kappa_method {
            KappaMethod::TalentiReference => Ok(KappaReport {
                method: KappaMethod::TalentiReference,
                value: talenti_constant(self.mesh.dim(), p)?,
                converged: true,
                estimate: None,
            }),
            KappaMethod::DiscreteRayleigh => {
                let opts = KappaOptions { seed: self.config.seed, ..th.kappa };
                let est = estimate_kappa(&self.mesh, self.norm.as_ref(), p, self.p_star()?, &opts)?;
                Ok(KappaReport { method: KappaMethod::DiscreteRayleigh, value: est.value, converged: est.converged, estimate: Some(est) })
            }
        }
    }

    pub fn lambda_params(&self, kappa: f64) -> Result<LambdaParams> {
        let pr = &self.config.problem;
        Ok(LambdaParams::new(kappa, pr.c, &self.config.nonlinearity(), pr.gamma, pr.p, self.p_star()?, self.mesh.domain_volume()))
    }

    pub fn thresholds(&self, kappa: &KappaReport, l_f: f64) -> Result<ThresholdReport> {
        ThresholdReport::compute(
            kappa.value,
            kappa.method,
            self.config.thresholds.kappa_inflation,
            kappa.converged,
            l_f,
            self.lambda_params(kappa.value)?,
        )
    }

    /// l_F, κ and the threshold report.
    pub fn all_thresholds(&self) -> Result<(UniformityEstimate, KappaReport, ThresholdReport)> {
        let lf = self.lf()?;
        let kappa = self.kappa()?;
        let th = self.thresholds(&kappa, lf.value)?;
        Ok((lf, kappa, th))
    }

    /// λ from the config; warns when it leaves (0, λ*).
    pub fn lambda(&mut self, th: &ThresholdReport) -> Result<f64> {
        let lambda = match self.config.problem.lambda {
            LambdaSetting::Value(l) => l,
            LambdaSetting::Mode(_) => {
                if !(th.lambda_star > 0.0) {
                    return Err(Error::ParameterRegime(format!(
                        "lambda* = {} <= 0, cannot choose lambda = lambda*/2",
                        th.lambda_star
                    )));
                }
                th.lambda_star / 2.0
            }
        };
        if !(lambda > 0.0 && lambda < th.lambda_star) {
            let w = format!(
                "lambda = {lambda} lies outside (0, lambda*) with lambda* = {}; existence is not guaranteed",
                th.lambda_star
            );
            log::warn!("{w}");
            self.warnings.push(w);
        }
        Ok(lambda)
    }

    pub fn sigma(&self, th: &ThresholdReport) -> f64 {
        self.config.solver.sigma.unwrap_or(self.config.solver.sigma_fraction * th.s_max.min(th.sigma_star))
    }

    pub fn spec(&mut self, lambda: f64) -> Result<ProblemSpec> {
        let (spec, warnings) = self.config.problem_spec(&self.mesh, lambda, self.mode)?;
        self.warnings.extend(warnings.into_iter().map(|w| format!("hypothesis violated (relaxed mode): {w}")));
        Ok(spec)
    }

    pub fn solve(&mut self, th: &ThresholdReport) -> Result<(ProblemSpec, SolveReport)> {
        let lambda = self.lambda(th)?;
        let spec = self.spec(lambda)?;
        let sigma = self.sigma(th);
        if sigma >= th.sigma_star {
            self.warnings.push(format!("sigma = {sigma} is not below sigma* = {}", th.sigma_star));
        }
        let report = minimize(&spec, &self.config.solver, sigma)?;
        Ok((spec, report))
    }

    pub fn load_solution(&self, path: &Path) -> Result<FeFunction> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Config(format!("cannot open solution {}: {e}", path.display())))?;
        read_csv(self.mesh.clone(), std::io::BufReader::new(file))
    }

    pub fn verify(&self, u: &FeFunction, spec: &ProblemSpec, sigma: f64) -> Verification {
        verify(u, spec, sigma, &self.config.verify)
    }
}

/// Summary written as `run.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub exit_code: i32,
    pub stages: Vec<StageStatus>,
    pub warnings: Vec<String>,
    pub lambda: Option<f64>,
    pub lambda_star: Option<f64>,
    pub sigma: Option<f64>,
    pub error: Option<String>,
}

pub fn thresholds_csv(th: &ThresholdReport) -> String {
    let mut s = String::from(
        "kappa,kappa_method,kappa_inflation,kappa_used,l_f,sigma_star,s_max,lambda_at_smax,lambda_star,lambda_star_at,domain_volume\n",
    );
    let method = serde_json::to_value(th.kappa_method).unwrap();
    let at = serde_json::to_value(th.lambda_star_at).unwrap();
    s += &format!(
        "{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e}\n",
        th.kappa,
        method.as_str().unwrap(),
        th.kappa_inflation,
        th.kappa_used,
        th.l_f,
        th.sigma_star,
        th.s_max,
        th.lambda_at_smax,
        th.lambda_star,
        at.as_str().unwrap(),
        th.domain_volume
    );
    s
}

pub fn lambda_scan_csv(lp: &LambdaParams, per_decade: usize) -> Result<String> {
    let mut s = String::from("s,lambda\n");
    for (x, v) in lambda_scan(lp, per_decade)? {
        s += &format!("{x:e},{v:e}\n");
    }
    Ok(s)
}

pub fn trace_csv(report: &SolveReport) -> String {
    let mut s = String::from("iteration,epsilon,energy,gradient_map,min_u\n");
    for r in &report.trace {
        s += &format!("{},{:e},{:e},{:e},{:e}\n", r.iteration, r.epsilon, r.energy, r.gradient_map, r.min_u);
    }
    s
}

/// Writes the solve report, the solution as VTK and CSV, and the trace.
pub fn write_solution(out: &mut Outputs, report: &SolveReport) -> Result<()> {
    out.write_json("solve_report.json", report)?;
    out.write_with("solution.vtk", |b| write_vtk(&report.solution, b))?;
    out.write_with("solution.csv", |b| write_csv(&report.solution, b))?;
    out.write("trace.csv", trace_csv(report).as_bytes())
}

/// validate → norm diagnostics → l_F → κ → thresholds → solve → verify,
/// writing every report and a manifest. Errors end the run early with
/// the matching exit code; the files written so far stay listed.
pub fn run_pipeline(session: &mut Session, out_dir: &Path, solve: bool) -> Result<RunSummary> {
    let mut out = Outputs::new(out_dir)?;
    let mut summary = RunSummary {
        exit_code: EXIT_OK,
        stages: Vec::new(),
        warnings: Vec::new(),
        lambda: None,
        lambda_star: None,
        sigma: None,
        error: None,
    };
    let result = run_stages(session, &mut out, &mut summary, solve);
    if let Err(e) = &result {
        summary.exit_code = exit_code(e);
        summary.error = Some(e.to_string());
    }
    summary.warnings = session.warnings.clone();
    out.write_json("run.json", &summary)?;
    out.finish()?;
    match result {
        Err(e) if matches!(e, Error::Io(_)) => Err(e),
        _ => Ok(summary),
    }
}

fn run_stages(session: &mut Session, out: &mut Outputs, summary: &mut RunSummary, solve: bool) -> Result<()> {
    out.write("config.toml", session.config.to_toml().as_bytes())?;
    let stage = |summary: &mut RunSummary, name, passed, detail: String| {
        summary.stages.push(StageStatus { stage: name, passed, detail });
        if !passed && summary.exit_code == EXIT_OK {
            summary.exit_code = EXIT_VERIFICATION;
        }
    };

    let rep = session.validate()?;
    out.write_json("validate.json", &rep)?;
    stage(summary, "validate", true, format!("{} hypotheses checked", rep.checks.len()));

    let nd = session.norm_check();
    out.write_json("norm_check.json", &nd)?;
    stage(summary, "norm-check", nd.passes(), format!("{} samples of {}", nd.samples, nd.label));

    let lf = session.lf()?;
    out.write_json("lf.json", &lf)?;
    stage(summary, "lf", (0.0..=1.0).contains(&lf.value) && lf.value > 0.0, format!("l_F = {:.9}", lf.value));

    let kappa = session.kappa()?;
    out.write_json("kappa.json", &kappa)?;
    stage(summary, "kappa", kappa.converged, format!("kappa = {:.9}", kappa.value));

    let th = session.thresholds(&kappa, lf.value)?;
    out.write_json("thresholds.json", &th)?;
    out.write("thresholds.csv", thresholds_csv(&th).as_bytes())?;
    summary.lambda_star = Some(th.lambda_star);
    stage(summary, "thresholds", !th.regime_warning, format!("lambda* = {:.9e}", th.lambda_star));
    if th.regime_warning {
        session.warnings.push(format!("lambda* = {} <= 0", th.lambda_star));
    }

    if !solve {
        return Ok(());
    }
    let (spec, report) = session.solve(&th)?;
    summary.lambda = Some(spec.lambda);
    summary.sigma = Some(report.sigma);
    write_solution(out, &report)?;
    stage(summary, "solve", report.converged, format!("{} iterations", report.total_iterations));
    out.write_json("verification.json", &report.verification)?;
    let failed: Vec<&str> = report.verification.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    stage(
        summary,
        "verify",
        report.verification.passed,
        if failed.is_empty() { "all checks passed".into() } else { format!("failed: {}", failed.join(", ")) },
    );
    Ok(())
}

/// One row of a λ sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub converged: bool,
    pub energy: f64,
    pub weak_residual_relative: f64,
    pub nehari_residual: f64,
    pub min_interior: f64,
    pub norm_ratio: f64,
}

/// Solves at λ = λ*·k/(n+1), k = 1..n.
pub fn sweep_lambda(session: &mut Session, th: &ThresholdReport, points: usize) -> Result<Vec<SweepRow>> {
    if !(th.lambda_star > 0.0) {
        return Err(Error::ParameterRegime(format!("lambda* = {} <= 0, nothing to sweep", th.lambda_star)));
    }
    let sigma = session.sigma(th);
    (1..=points)
        .map(|k| {
            let lambda = th.lambda_star * k as f64 / (points + 1) as f64;
            let spec = session.spec(lambda)?;
            let r = minimize(&spec, &session.config.solver, sigma)?;
            let v = &r.verification;
            Ok(SweepRow {
                lambda,
                converged: r.converged,
                energy: r.energy.total,
                weak_residual_relative: v.weak_residual_max / v.max_load,
                nehari_residual: v.nehari_residual,
                min_interior: r.min_interior,
                norm_ratio: r.norm_ratio,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("lambda,converged,energy,weak_residual_relative,nehari_residual,min_interior,norm_ratio\n");
    for r in rows {
        s += &format!(
            "{:e},{},{:e},{:e},{:e},{:e},{:e}\n",
            r.lambda, r.converged, r.energy, r.weak_residual_relative, r.nehari_residual, r.min_interior, r.norm_ratio
        );
    }
    s
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}
