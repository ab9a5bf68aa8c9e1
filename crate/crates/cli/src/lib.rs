//! Argument handling and commands behind the `hbvm` binary.

pub mod manifest;
pub mod quantity;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hbvm::{
    build_tableau, builtin, convergence_table, stroboscopic_sample, Builtin, FdepcaProblem,
    HbvmError, Integrator, Overrides, RecordRetention, SolveConfig, StepSize,
};

use crate::manifest::RunManifest;
use crate::quantity::{parse_quantity, positive_quantity};

#[derive(Debug, Parser)]
#[command(
    name = "hbvm",
    version,
    about = "HBVM(k,s) integrators for y' = f(y(t), y(⌊t⌋))"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the abscissae, weights, A, Ps and Is of HBVM(k,s).
    Tableau(MethodArgs),
    /// Integrate one problem and write the trajectory as CSV.
    Solve(SolveArgs),
    /// Last-point errors and order estimates over successive halvings of h.
    Converge(ConvergeArgs),
    /// Sample the solution once per period.
    Strobe(StrobeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    /// Number of Gauss abscissae.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Degree of the polynomial approximation.
    #[arg(long, default_value_t = 2)]
    pub s: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long, default_value = "problem1", value_parser = parse_builtin)]
    pub problem: Builtin,
    #[arg(long, value_parser = parse_quantity)]
    pub alpha: Option<f64>,
    #[arg(long, value_parser = parse_quantity)]
    pub q0: Option<f64>,
    #[arg(long, value_parser = parse_quantity)]
    pub p0: Option<f64>,
    /// Length τ of the intervals on which the delayed argument is frozen
    /// (1 for problems 1 and 2, T for problem 3).
    #[arg(long, value_parser = positive_quantity)]
    pub delay_interval: Option<f64>,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct StepArgs {
    /// Steps per delay interval (aligned mesh).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub nu: Option<u32>,
    /// Step size, e.g. 0.05, 1/20 or T/100.
    #[arg(long, value_parser = positive_quantity)]
    pub h: Option<f64>,
}

impl StepArgs {
    pub fn step(&self) -> StepSize {
        match (self.nu, self.h) {
            (Some(nu), _) => StepSize::Aligned { nu },
            (None, Some(h)) => StepSize::General { h },
            (None, None) => unreachable!("clap requires --nu or --h"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub step: StepArgs,
    #[arg(long, value_parser = positive_quantity)]
    pub t_end: f64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every n-th step.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub sample_every: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Coarsest step.
    #[command(flatten)]
    pub step: StepArgs,
    #[arg(long, value_parser = positive_quantity)]
    pub t_end: f64,
    /// Number of halvings; the table has levels + 1 rows.
    #[arg(long, default_value_t = 3, value_parser = parse_levels)]
    pub levels: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StrobeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub step: StepArgs,
    /// Horizon.
    #[arg(long, value_parser = positive_quantity)]
    pub t_end: f64,
    #[arg(long, default_value = "T", value_parser = positive_quantity)]
    pub period: f64,
    /// Keep only the last n samples.
    #[arg(long)]
    pub last_n: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_levels(text: &str) -> Result<usize, String> {
    match text.parse::<usize>() {
        Ok(n) if n >= 2 => Ok(n),
        _ => Err(format!("levels must be an integer ≥ 2, got '{text}'")),
    }
}

fn parse_builtin(text: &str) -> Result<Builtin, String> {
    text.parse().map_err(|e: HbvmError| e.to_string())
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failure, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<HbvmError> for CliError {
    fn from(e: HbvmError) -> Self {
        match e {
            HbvmError::InvalidParameter(_)
            | HbvmError::DimensionMismatch { .. }
            | HbvmError::Unsupported(_)
            | HbvmError::HorizonMismatch(..) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Tableau(args) => cmd_tableau(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Converge(args) => cmd_converge(&args),
        Command::Strobe(args) => cmd_strobe(&args),
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn make_problem(args: &ProblemArgs) -> Result<FdepcaProblem, CliError> {
    let y0 = match (args.q0, args.p0) {
        (None, None) => None,
        (q, p) => {
            let [dq, dp] = args.problem.default_y0();
            Some(vec![q.unwrap_or(dq), p.unwrap_or(dp)])
        }
    };
    let overrides = Overrides {
        alpha: args.alpha,
        y0,
        delay_interval: args.delay_interval,
    };
    Ok(builtin(args.problem, &overrides)?)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn cmd_tableau(args: &MethodArgs) -> Result<(), CliError> {
    let tableau = build_tableau(args.k, args.s)?;
    let mut out = io::stdout().lock();
    write!(out, "{tableau}")?;
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let problem = make_problem(&args.problem)?;
    let config = SolveConfig::new(args.method.k, args.method.s, args.step.step(), args.t_end)
        .with_retention(RecordRetention::LastOnly);
    let integrator = Integrator::new(problem.clone(), config.clone())?;
    let manifest = RunManifest::new("solve", &problem, &config, args.out.as_deref())
        .with_entry("sample_every", args.sample_every.to_string());

    let mut out = open_output(&args.out)?;
    manifest.write_header(&mut out)?;
    let energy = problem.has_hamiltonian();
    writeln!(out, "{}", if energy { "t,q,p,H,absdH" } else { "t,q,p" })?;

    let n_steps = integrator.n_steps() as u64;
    let mut step = 0u64;
    let mut io_error: Option<io::Error> = None;
    let result = integrator.run_with(|rec| {
        step += 1;
        if io_error.is_some() || (!step.is_multiple_of(args.sample_every) && step != n_steps) {
            return;
        }
        let mut fields = vec![fmt(rec.t_right())];
        fields.extend(rec.y_right.iter().map(|&v| fmt(v)));
        if energy {
            let h_right = problem.hamiltonian(&rec.y_right).unwrap_or(f64::NAN);
            let h_left = problem.hamiltonian(&rec.y_left).unwrap_or(f64::NAN);
            fields.push(fmt(h_right));
            fields.push(fmt((h_right - h_left).abs()));
        }
        if let Err(e) = writeln!(out, "{}", fields.join(",")) {
            io_error = Some(e);
        }
    });
    if let Some(e) = io_error {
        return Err(e.into());
    }
    match result {
        Ok(_) => {
            out.flush()?;
            Ok(())
        }
        Err(failure) => {
            writeln!(out, "# ABORTED: {failure}")?;
            out.flush()?;
            Err(failure.error.into())
        }
    }
}

pub fn cmd_converge(args: &ConvergeArgs) -> Result<(), CliError> {
    let problem = make_problem(&args.problem)?;
    let (k, s) = (args.method.k, args.method.s);
    let step = args.step.step();
    let config = SolveConfig::new(k, s, step, args.t_end);
    let manifest = RunManifest::new("converge", &problem, &config, args.out.as_deref())
        .with_entry("levels", args.levels.to_string());
    let table = convergence_table(&problem, k, s, step, args.levels, args.t_end);

    let mut out = open_output(&args.out)?;
    manifest.write_header(&mut out)?;
    writeln!(out, "h,eps,p")?;
    let (rows, failure) = match table {
        Ok(rows) => (rows, None),
        Err(e) => (e.rows, Some(e.error)),
    };
    for row in &rows {
        let p = row.p.map(fmt).unwrap_or_default();
        writeln!(out, "{},{},{}", fmt(row.h), fmt(row.eps), p)?;
    }
    if let Some(error) = failure {
        writeln!(out, "# ABORTED: {error}")?;
        out.flush()?;
        return Err(error.into());
    }
    out.flush()?;
    Ok(())
}

pub fn cmd_strobe(args: &StrobeArgs) -> Result<(), CliError> {
    let problem = make_problem(&args.problem)?;
    if args.period > args.t_end {
        return Err(CliError::Usage(format!(
            "period {} exceeds the horizon {}",
            args.period, args.t_end
        )));
    }
    let config = SolveConfig::new(args.method.k, args.method.s, args.step.step(), args.t_end);
    let integrator = Integrator::new(problem.clone(), config.clone())?;
    let manifest = RunManifest::new("strobe", &problem, &config, args.out.as_deref())
        .with_entry("period", fmt(args.period))
        .with_entry(
            "last_n",
            args.last_n.map_or("all".into(), |n| n.to_string()),
        );
    let traj = integrator.run().map_err(|e| CliError::from(e.error))?;
    let samples = stroboscopic_sample(&traj, args.period)?;
    let skip = args.last_n.map_or(0, |n| samples.len().saturating_sub(n));

    let mut out = open_output(&args.out)?;
    manifest.write_header(&mut out)?;
    writeln!(out, "t,q,p")?;
    for (j, y) in samples.iter().enumerate().skip(skip) {
        let t = (j + 1) as f64 * args.period;
        let fields: Vec<String> = std::iter::once(t)
            .chain(y.iter().copied())
            .map(fmt)
            .collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}
