use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use conformable_core::calculus::{self, DerivativeMethod, DerivativeOptions};
use conformable_core::fde::{self, flipped_companion_system};
use conformable_core::structure::{self, abel_predict};
use conformable_core::verify::{self, Suite};
use conformable_core::{AlphaOrder, Error, RealFunction, SolveOptions, Trajectory};

mod output;
mod problem;

use output::{number, state_header, write_all, Csv};
use problem::ProblemFile;

/// Overrides the solver's default relative tolerance; the absolute
/// tolerance follows at a thousandth of it.
const TOLERANCE_ENV: &str = "CFDE_RTOL";

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Numerical(m) | CliError::Verification(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::Domain(_)
            | Error::InvalidAlpha(_)
            | Error::Precondition(_)
            | Error::Invalid { .. } => CliError::Input(e.to_string()),
            Error::Convergence(_)
            | Error::Quadrature(_)
            | Error::StepUnderflow { .. }
            | Error::MaxSteps(_)
            | Error::SingularSystem { .. }
            | Error::Fundamentality { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "cfde",
    version,
    about = "Conformable fractional calculus and sequential FDE solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Limit,
    Reduction,
}

#[derive(Subcommand)]
enum Command {
    /// Conformable derivative of an expression in `t`.
    #[command(group(ArgGroup::new("points").required(true).args(["at", "grid"])))]
    Deriv {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        alpha: f64,
        /// Evaluation point; may be repeated.
        #[arg(long, allow_hyphen_values = true)]
        at: Vec<f64>,
        /// Uniform grid as `lo,hi,count`.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long, value_enum, default_value_t = Method::Limit)]
        method: Method,
    },
    /// Conformable integral from `--from` to `--to`.
    Integ {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
    },
    /// Solve the initial value problem in a JSON problem file.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Add particular and fundamental-set columns plus a coefficient sidecar.
        #[arg(long)]
        parts: bool,
        #[arg(long, default_value_t = 200)]
        nodes: usize,
        /// Emit the solver's own nodes instead of a uniform resampling.
        #[arg(long, conflicts_with = "nodes")]
        raw: bool,
    },
    /// Canonical fundamental set and Wronskian check of a homogeneous problem.
    Fundset {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        nodes: usize,
    },
    /// Seeded randomized property suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Solve with a sign-flipped companion matrix.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn default_options() -> Result<SolveOptions, CliError> {
    let mut opts = SolveOptions::default();
    if let Ok(raw) = std::env::var(TOLERANCE_ENV) {
        let rtol: f64 = raw
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| *v > 0.0 && v.is_finite())
            .ok_or_else(|| {
                CliError::Input(format!(
                    "{TOLERANCE_ENV}: expected a positive number, got '{raw}'"
                ))
            })?;
        opts.rtol = rtol;
        opts.atol = 1e-3 * rtol;
    }
    Ok(opts)
}

fn grid_points(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Input(format!("grid: expected 'lo,hi,count', got '{text}'"));
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [lo, hi, count] = parts[..] else {
        return Err(bad());
    };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    if count == 0 || lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect())
}

fn deriv(
    expr: &str,
    alpha: f64,
    at: Vec<f64>,
    grid: Option<String>,
    method: Method,
) -> Result<(), CliError> {
    let f = RealFunction::parse(expr)?;
    let alpha = AlphaOrder::new(alpha)?;
    let points = match grid {
        Some(text) => grid_points(&text)?,
        None => at,
    };
    let method = match method {
        Method::Limit => DerivativeMethod::Limit,
        Method::Reduction => DerivativeMethod::Reduction,
    };
    let mut csv = Csv::new(&["t", "T_alpha_f"]);
    for t in points {
        let d = calculus::t_alpha(&f, alpha, t, method, &DerivativeOptions::default())?;
        csv.row(&[t, d]);
    }
    print!("{}", csv.into_string());
    Ok(())
}

fn integ(expr: &str, alpha: f64, from: f64, to: f64) -> Result<(), CliError> {
    let f = RealFunction::parse(expr)?;
    let value = calculus::i_alpha(&f, AlphaOrder::new(alpha)?, from, to)?;
    println!("{}", number(value));
    Ok(())
}

fn output_times(traj: &Trajectory, nodes: usize, raw: bool) -> Result<Vec<f64>, CliError> {
    if raw {
        return Ok(traj.grid().to_vec());
    }
    if nodes < 2 {
        return Err(CliError::Input("nodes: need at least 2".into()));
    }
    Ok(traj.resample(nodes)?.into_iter().map(|(t, _)| t).collect())
}

fn solve(
    path: PathBuf,
    out: PathBuf,
    parts: bool,
    nodes: usize,
    raw: bool,
    defaults: &SolveOptions,
) -> Result<(), CliError> {
    let problem = ProblemFile::read(&path)?.validate(defaults)?;
    let (fde, ic, opts) = (&problem.fde, &problem.ic, &problem.options);
    let n = fde.order();
    let traj = fde::solve_span(fde, ic, problem.span, opts)?;
    let times = output_times(&traj, nodes, raw)?;

    let mut header = state_header(n);
    let mut extra: Vec<Trajectory> = Vec::new();
    let mut sidecar = None;
    if parts {
        let coefficients = if fde.is_homogeneous() {
            let set = structure::build_fundamental_set(fde, ic.t0, problem.span, opts)?;
            let c = structure::fit_coefficients(&set, ic)?;
            extra.extend(set.trajectories().iter().cloned());
            c
        } else {
            let split = structure::solve_nonhomogeneous(fde, ic, problem.span, opts)?;
            header.push("yp".into());
            extra.push(split.particular);
            extra.extend(split.fundamental.trajectories().iter().cloned());
            split.coefficients
        };
        header.extend((1..=n).map(|j| format!("y{j}")));
        let json = serde_json::json!({
            "t0": ic.t0,
            "particular": !fde.is_homogeneous(),
            "coefficients": coefficients,
        });
        sidecar = Some(serde_json::to_string_pretty(&json).expect("plain JSON") + "\n");
    }

    let mut csv = Csv::new(&header);
    for &t in &times {
        let mut row = vec![t];
        row.extend(traj.state_at(t)?);
        for y in &extra {
            row.push(y.value_at(t)?);
        }
        csv.row(&row);
    }
    let mut files = vec![(out.clone(), csv.into_string())];
    if let Some(json) = sidecar {
        files.push((out.with_extension("coefficients.json"), json));
    }
    write_all(&files)
}

fn fundset(
    path: PathBuf,
    out: PathBuf,
    nodes: usize,
    defaults: &SolveOptions,
) -> Result<(), CliError> {
    let problem = ProblemFile::read(&path)?.validate(defaults)?;
    let fde = &problem.fde;
    if !fde.is_homogeneous() {
        return Err(CliError::Input(
            "q: the fundamental set needs a homogeneous problem (q = 0)".into(),
        ));
    }
    let set = structure::build_fundamental_set(fde, problem.ic.t0, problem.span, &problem.options)?;
    let times = output_times(&set.trajectories()[0], nodes, false)?;

    let mut files = Vec::new();
    for (j, y) in set.trajectories().iter().enumerate() {
        let mut csv = Csv::new(&state_header(fde.order()));
        for &t in &times {
            let mut row = vec![t];
            row.extend(y.state_at(t)?);
            csv.row(&row);
        }
        files.push((out.join(format!("y{}.csv", j + 1)), csv.into_string()));
    }
    let mut csv = Csv::new(&["t", "W_alpha", "abel_prediction", "rel_error"]);
    for &t in &times {
        let w = set.wronskian_at(t)?.det;
        let predicted = abel_predict(fde, set.w_at_t0(), set.t0(), t)?;
        csv.row(&[t, w, predicted, (w - predicted).abs() / predicted.abs()]);
    }
    files.push((out.join("wronskian.csv"), csv.into_string()));

    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Input(format!("{}: {e}", out.display())))?;
    write_all(&files)
}

fn run_verify(
    suite: &str,
    seed: u64,
    inject_fault: bool,
    defaults: &SolveOptions,
) -> Result<(), CliError> {
    let suite: Suite = suite.parse()?;
    let mut opts = *defaults;
    if inject_fault {
        opts.companion = flipped_companion_system;
    }
    let results = verify::run(suite, seed, &opts);
    for r in &results {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        let mut line = format!(
            "{verdict} {:<36} max_residual={:<10.3e} tolerance={:.1e}",
            r.name, r.max_residual, r.tolerance
        );
        if let Some(err) = &r.error {
            line.push_str(&format!(" ({err})"));
        }
        println!("{line}");
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name).collect();
    println!(
        "{} of {} properties passed (seed {seed})",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "failed properties: {}",
            failed.join(", ")
        )))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let defaults = default_options()?;
    match cli.command {
        Command::Deriv {
            expr,
            alpha,
            at,
            grid,
            method,
        } => deriv(&expr, alpha, at, grid, method),
        Command::Integ {
            expr,
            alpha,
            from,
            to,
        } => integ(&expr, alpha, from, to),
        Command::Solve {
            problem,
            out,
            parts,
            nodes,
            raw,
        } => solve(problem, out, parts, nodes, raw, &defaults),
        Command::Fundset {
            problem,
            out,
            nodes,
        } => fundset(problem, out, nodes, &defaults),
        Command::Verify {
            suite,
            seed,
            inject_fault,
        } => run_verify(&suite, seed, inject_fault, &defaults),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
