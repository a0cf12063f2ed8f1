//! `caplab` command line.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::{ExperimentConfig, Scenario};
use super::experiments::{run_angle_sweep, run_experiment, Outcome};
use super::report::{angle_rows_to_csv, write_text, CsvTable};
use crate::capillary::CapillaryAngle;
use crate::error::{Error, Result};
use crate::estimates::{
    angle_in_u, angle_range_threshold, constant_c_theta, cutoff_psi_derivative_check, script_b, CutoffParams,
    LinearBound,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "caplab", version, about = "Capillary graph experiments over a truncated half-space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Experiment configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; overrides `out_csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the configured experiment and emit its CSV.
    Solve(RunArgs),
    /// Check the closed-form constants, then run the configured experiment if one is given.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the admissible-angle range and constants.
    Sweep {
        /// Dimensions to tabulate (repeat or comma-separate).
        #[arg(long = "n", value_delimiter = ',', default_values_t = vec![4])]
        n: Vec<usize>,
        #[arg(long = "theta-steps", default_value_t = 90)]
        theta_steps: usize,
        #[arg(long = "sin-min", default_value_t = crate::capillary::DEFAULT_SIN_MIN)]
        sin_min: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Liouville experiment (the config must select a liouville scenario).
    Liouville(RunArgs),
    /// Validate a configuration and its hypotheses without solving.
    Audit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize a CSV written by this tool.
    Report {
        #[arg(long)]
        csv: PathBuf,
    },
}

/// Exit code for an error: bad input is 3, failed numerics 2, broken invariants 1.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Io(_)
        | Error::InvalidAngle { .. }
        | Error::InvalidParameter(_)
        | Error::NonconformingExtent { .. }
        | Error::BadDimension(_)
        | Error::AngleOutOfRange { .. }
        | Error::HypothesisViolation(_)
        | Error::DirichletCoverage(_)
        | Error::EmptyRegion => EXIT_CONFIG,
        Error::LinearSolveFailure { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_VIOLATION,
    }
}

/// Writes `csv` to `path`, or to stdout when there is none. The summary goes
/// to stdout in the first case and stderr in the second.
fn emit(csv: &str, summary: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            write_text(p, csv)?;
            print!("{summary}");
            println!("wrote {}", p.display());
        }
        None => {
            print!("{csv}");
            eprint!("{summary}");
        }
    }
    std::io::stdout().flush()?;
    Ok(())
}

fn outcome_code(outcome: &Outcome) -> i32 {
    if !outcome.all_converged() {
        EXIT_NONCONVERGENCE
    } else if !outcome.violations().is_empty() {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}

fn run_config(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<i32> {
    let outcome = run_experiment(cfg)?;
    let path = out.or(cfg.out_csv.as_deref());
    emit(&outcome.to_csv(), &outcome.summary(), path)?;
    Ok(outcome_code(&outcome))
}

/// Closed-form checks that need no solve.
fn verify_constants() -> Result<Vec<String>> {
    let mut failures = Vec::new();
    let exact = [(4, 15.0 / 16.0), (5, 8.0 / 9.0)];
    for (n, want) in exact {
        if (angle_range_threshold(n) - want).abs() > 1e-15 {
            failures.push(format!("threshold({n}) = {} != {want}", angle_range_threshold(n)));
        }
    }
    let right = CapillaryAngle::new(std::f64::consts::FRAC_PI_2)?;
    if constant_c_theta(&right) != 0.0 {
        failures.push("C_theta at pi/2 is not zero".into());
    }
    match script_b(4, &right, 0.0) {
        Some(b) if (b - 1.875).abs() <= 1e-15 => {}
        other => failures.push(format!("script_B(4, pi/2, 0) = {other:?}, expected 1.875")),
    }
    for t in [0.3, 1.0, 1.4] {
        let a = CapillaryAngle::new(t)?;
        if (constant_c_theta(&a) - constant_c_theta(&a.supplement())).abs() > 1e-15 {
            failures.push(format!("C_theta not symmetric at {t}"));
        }
        let check = cutoff_psi_derivative_check(&CutoffParams::new(2.0, a)?, 2, 1000, 0)?;
        let ok = check.gradient_bound_violation <= 1e-12
            && check.boundary_identity_residual <= 1e-12
            && check.inner_min_psi >= check.inner_lower_bound - 1e-12;
        if !ok {
            failures.push(format!("cut-off derivative identities fail at theta = {t}: {check:?}"));
        }
    }
    Ok(failures)
}

fn audit(cfg: &ExperimentConfig) -> Result<i32> {
    let theta = cfg.angle()?;
    println!("scenario = {}", cfg.scenario);
    println!("dim = {}", cfg.dim);
    println!("theta_rad = {}", cfg.theta_rad);
    println!("r_levels = {:?}", cfg.r_levels);
    println!("h per level = {:?}", (0..cfg.r_levels.len()).map(|k| cfg.h_at(k)).collect::<Vec<_>>());
    println!("seed = {}", cfg.seed);
    let c_theta = constant_c_theta(&theta);
    println!("C_theta = {c_theta}");
    let range = angle_in_u(cfg.range_n, &theta)?;
    println!("angle admissible for n = {}: {} (margin {})", cfg.range_n, range.in_range, range.margin);
    let mut code = EXIT_OK;
    if cfg.scenario == Scenario::LiouvilleOneSided {
        let bound = LinearBound { slope: cfg.l_slope_full(), offset: cfg.l_offset };
        if let Err(e) = CutoffParams::new(1.0, theta)?.with_bound(bound).check_one_sided_hypothesis() {
            println!("hypothesis: {e}");
            code = EXIT_CONFIG;
        }
    }
    if cfg.strict_angle_range && !range.in_range {
        println!("hypothesis: angle outside the admissible range");
        code = EXIT_CONFIG;
    }
    Ok(code)
}

fn report(path: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let table = CsvTable::parse(&text)?;
    println!("{}: {} row(s), columns {}", path.display(), table.rows.len(), table.columns.join(","));
    for row in &table.rows {
        println!("  {}", row.join("  "));
    }
    if let Some(status) = table.column("status") {
        let bad = status.iter().filter(|s| **s != "converged").count();
        println!("non-converged rows: {bad}");
    }
    Ok(EXIT_OK)
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Solve(args) => run_config(&ExperimentConfig::from_file(&args.config)?, args.out.as_deref()),
        Command::Liouville(args) => {
            let cfg = ExperimentConfig::from_file(&args.config)?;
            if !matches!(cfg.scenario, Scenario::LiouvilleLinearGrowth | Scenario::LiouvilleOneSided) {
                return Err(Error::Config(format!("scenario {} is not a liouville scenario", cfg.scenario)));
            }
            run_config(&cfg, args.out.as_deref())
        }
        Command::Verify { config, out } => {
            let failures = verify_constants()?;
            for f in &failures {
                println!("constant check failed: {f}");
            }
            if failures.is_empty() {
                println!("closed-form constants: ok");
            }
            let mut code = if failures.is_empty() { EXIT_OK } else { EXIT_VIOLATION };
            if let Some(path) = config {
                let run = run_config(&ExperimentConfig::from_file(&path)?, out.as_deref())?;
                code = code.max(run);
            }
            Ok(code)
        }
        Command::Sweep { n, theta_steps, sin_min, out } => {
            if !(sin_min > 0.0 && sin_min < 1.0) {
                return Err(Error::Config(format!("--sin-min must lie in (0, 1), got {sin_min}")));
            }
            let rows = run_angle_sweep(&n, theta_steps, sin_min)?;
            let summary = Outcome::Angles(rows.clone()).summary();
            emit(&angle_rows_to_csv(&rows), &summary, out.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Audit { config } => audit(&ExperimentConfig::from_file(&config)?),
        Command::Report { csv } => report(&csv),
    }
}

/// Entry point; `args` includes the program name. Returns the exit code.
pub fn cli_main(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> i32 {
        cli_main(std::iter::once("caplab").chain(args.iter().copied()).map(String::from))
    }

    #[test]
    fn usage_errors_exit_3() {
        assert_eq!(run(&["frobnicate"]), EXIT_CONFIG);
        assert_eq!(run(&[]), EXIT_CONFIG);
        assert_eq!(run(&["solve"]), EXIT_CONFIG);
        assert_eq!(run(&["--help"]), EXIT_OK);
    }

    #[test]
    fn constants_verify() {
        assert!(verify_constants().unwrap().is_empty());
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::AngleOutOfRange { n: 4, theta: 0.1 }), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::LinearSolveFailure { iterations: 1, residual: 1.0 }), EXIT_NONCONVERGENCE);
        assert_eq!(exit_code(&Error::InvariantViolation("v".into())), EXIT_VIOLATION);
        assert_eq!(exit_code(&Error::StationarityViolation { trial: 0, epsilon: 0.1, drop: 1.0 }), EXIT_VIOLATION);
    }
}
