use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finsler_dp::config::ExperimentConfig;
use finsler_dp::musielak::Mode;
use finsler_dp::pipeline::{
    exit_code, lambda_scan_csv, run_pipeline, sweep_csv, sweep_lambda, thresholds_csv, write_solution, Outputs,
    Session, EXIT_OK, EXIT_VERIFICATION,
};
use finsler_dp::Result;

#[derive(Parser)]
#[command(name = "finsler-dp", version, about = "Singular Finsler double phase experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment config (TOML); the bundled default when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report hypothesis violations as warnings instead of errors.
    #[arg(long, global = true)]
    relaxed: bool,
    #[arg(long, global = true)]
    quad_order: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural hypotheses.
    Validate,
    /// Homogeneity, Euler and convexity diagnostics of the norm.
    NormCheck,
    /// Uniformity constant l_F.
    Lf,
    /// Discrete estimate of the embedding constant.
    Kappa,
    /// sigma*, s_max and lambda*.
    Thresholds {
        /// Also write (s, Lambda(s)) on a log grid.
        #[arg(long)]
        sweep: bool,
    },
    /// Minimize the energy on the ball and verify the result.
    Solve,
    /// Verify a stored solution.
    Verify {
        /// Solution CSV as written by `solve`.
        #[arg(long)]
        solution: PathBuf,
        /// Ball radius; computed from the thresholds when omitted.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Full pipeline.
    Run,
    /// Solve over a grid of lambda in (0, lambda*).
    SweepLambda {
        #[arg(long, default_value_t = 4)]
        points: usize,
    },
}

fn load(global: &Global) -> Result<(Session, PathBuf)> {
    let mut cfg = match &global.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::bundled_default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(k) = global.quad_order {
        cfg.problem.quad_order = k;
    }
    if global.relaxed {
        cfg.mode = Mode::Relaxed;
    }
    let out = global.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    let mode = cfg.mode;
    Ok((Session::new(cfg)?.with_mode(mode), out))
}

fn execute(cli: &Cli) -> Result<i32> {
    let (mut session, out_dir) = load(&cli.global)?;
    if let Command::Run = cli.command {
        let summary = run_pipeline(&mut session, &out_dir, true)?;
        for s in &summary.stages {
            println!("{:<11} {}  {}", s.stage, if s.passed { "PASS" } else { "FAIL" }, s.detail);
        }
        for w in &summary.warnings {
            println!("warning: {w}");
        }
        if let Some(e) = &summary.error {
            eprintln!("error: {e}");
        }
        return Ok(summary.exit_code);
    }

    let mut out = Outputs::new(&out_dir)?;
    let mut code = EXIT_OK;
    match &cli.command {
        Command::Validate => {
            let rep = session.config.validate_hypotheses(session.mode)?;
            for c in &rep.checks {
                println!("{:<16} {}  {}  ({})", c.name, if c.passed { "PASS" } else { "FAIL" }, c.statement, c.detail);
            }
            out.write_json("validate.json", &rep)?;
            session.validate()?;
        }
        Command::NormCheck => {
            let d = session.norm_check();
            println!("{}: {} samples, {}", d.label, d.samples, if d.passes() { "PASS" } else { "FAIL" });
            out.write_json("norm_check.json", &d)?;
            if !d.passes() {
                code = EXIT_VERIFICATION;
            }
        }
        Command::Lf => {
            let lf = session.lf()?;
            println!("l_F = {:.12} (resolution {}, {} points per sphere)", lf.value, lf.grid_resolution, lf.grid_points_per_sphere);
            out.write_json("lf.json", &lf)?;
        }
        Command::Kappa => {
            let k = session.kappa()?;
            println!("kappa = {:.12} (converged: {})", k.value, k.converged);
            out.write_json("kappa.json", &k)?;
        }
        Command::Thresholds { sweep } => {
            let (lf, kappa, th) = session.all_thresholds()?;
            println!(
                "l_F = {:.9}  kappa = {:.9}  sigma* = {:.9e}  s_max = {:.9e}  lambda* = {:.9e}",
                lf.value, kappa.value, th.sigma_star, th.s_max, th.lambda_star
            );
            out.write_json("thresholds.json", &th)?;
            out.write("thresholds.csv", thresholds_csv(&th).as_bytes())?;
            if *sweep {
                out.write("lambda_scan.csv", lambda_scan_csv(&th.lambda_params, 50)?.as_bytes())?;
            }
        }
        Command::Solve => {
            session.validate()?;
            let (_, _, th) = session.all_thresholds()?;
            out.write_json("thresholds.json", &th)?;
            let (_, report) = session.solve(&th)?;
            write_solution(&mut out, &report)?;
            println!(
                "converged: {}  J = {:.12e}  min u = {:.6e}  |u|/sigma = {:.6}  verification: {}",
                report.converged,
                report.energy.total,
                report.min_interior,
                report.norm_ratio,
                if report.verification.passed { "PASS" } else { "FAIL" }
            );
            if !report.converged || !report.verification.passed {
                code = EXIT_VERIFICATION;
            }
        }
        Command::Verify { solution, sigma } => {
            let u = session.load_solution(solution)?;
            let (th, sigma) = match sigma {
                Some(s) => (None, *s),
                None => {
                    let (_, _, th) = session.all_thresholds()?;
                    let s = session.sigma(&th);
                    (Some(th), s)
                }
            };
            let lambda = match &th {
                Some(th) => session.lambda(th)?,
                None => match session.config.problem.lambda {
                    finsler_dp::config::LambdaSetting::Value(l) => l,
                    _ => {
                        let (_, _, th) = session.all_thresholds()?;
                        session.lambda(&th)?
                    }
                },
            };
            let spec = session.spec(lambda)?;
            let v = session.verify(&u, &spec, sigma);
            for c in &v.checks {
                println!("{:<19} {}  value {:.6e}  threshold {:.1e}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.value, c.threshold);
            }
            out.write_json("verification.json", &v)?;
            if !v.passed {
                code = EXIT_VERIFICATION;
            }
        }
        Command::SweepLambda { points } => {
            session.validate()?;
            let (_, _, th) = session.all_thresholds()?;
            let rows = sweep_lambda(&mut session, &th, *points)?;
            for r in &rows {
                println!("lambda = {:.6e}  converged: {}  J = {:.9e}", r.lambda, r.converged, r.energy);
            }
            out.write("lambda_sweep.csv", sweep_csv(&rows).as_bytes())?;
            if rows.iter().any(|r| !r.converged) {
                code = EXIT_VERIFICATION;
            }
        }
        Command::Run => unreachable!(),
    }
    for w in &session.warnings {
        println!("warning: {w}");
    }
    out.finish()?;
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
