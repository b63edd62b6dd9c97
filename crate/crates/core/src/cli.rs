//! Command-line front end: `run`, `figure1` and `certify`.
//!
//! Settings resolve as command-line flag, then the problem file's `run`
//! section, then the built-in default. Exit codes: 0 success, 1 a requested
//! certificate failed, 2 invalid configuration or I/O error, 3 the flow
//! aborted (rank failure, penalty growth or blow-up).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;

use crate::diagnostics::{
    certify_critical_convergence, certify_gram_convergence, CertificateReport, CriticalTolerances,
    DEFAULT_TOL_FEAS, DEFAULT_TOL_GRAM, DEFAULT_TOL_STAT,
};
use crate::error::{Error, Result};
use crate::flow::{
    integrate, read_trajectory_file, write_trajectory_file, IntegratorConfig, Scheme, Trajectory,
    TrajectoryFormat,
};
use crate::landing::{FieldKind, LandingParams};
use crate::linalg::FullRankMatrix;
use crate::parallel::ordered_map;
use crate::problems::{make_linear, ProblemInstance, ProblemSpec, LINEAR21_A};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATE_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_FLOW_FAILED: i32 = 3;

const PRECEDENCE: &str = "Settings resolve as: command-line flag > problem file `run` section > default.\n\
Defaults: field landing, lambda 1, integrator rk4, dt 0.01/lambda, tmax 20/lambda, record-every 1.\n\
LANDING_NUM_THREADS caps the number of worker threads.";

#[derive(Debug, Parser)]
#[command(name = "landing", version, about = "Retraction-free landing flows on the Stiefel manifold", after_help = PRECEDENCE)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a flow and write its trajectory.
    Run(RunArgs),
    /// Landing flows on St(1,2) for a λ grid and two starting points.
    Figure1(Figure1Args),
    /// Emit JSON certificates for a trajectory file or a fresh run.
    Certify(CertifyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct FlowArgs {
    /// Builtin problem (linear21, procrustes, rayleigh, constant) or JSON problem file.
    #[arg(long, default_value = "linear21")]
    pub problem: String,
    /// landing | plam
    #[arg(long)]
    pub field: Option<FieldKind>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// euler | rk4 | rkf45
    #[arg(long)]
    pub integrator: Option<Scheme>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Overrides the problem seed (problem data and random start).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "record-every")]
    pub record_every: Option<usize>,
    /// Stop once ‖Λ‖_F falls to this value.
    #[arg(long = "residual-tol")]
    pub residual_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Trajectory output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv | json (default: from --out extension, else csv)
    #[arg(long)]
    pub format: Option<TrajectoryFormat>,
}

#[derive(Debug, Clone, Args)]
pub struct Figure1Args {
    #[arg(long = "out-dir", default_value = "figure1")]
    pub out_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 1.0, 4.0])]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value = "rk4")]
    pub integrator: Scheme,
    /// Absolute step (default 0.01/λ per cell).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Absolute horizon (default 20·max(1, 1/λ) per cell: the penalty decays
    /// at rate 2λ, the tangential motion at a rate independent of λ).
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long, default_value = "csv")]
    pub format: TrajectoryFormat,
    /// Recorded in the manifest; the figure itself uses fixed starting points.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "record-every", default_value_t = 1)]
    pub record_every: usize,
}

impl Default for Figure1Args {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("figure1"),
            lambdas: vec![0.25, 1.0, 4.0],
            integrator: Scheme::Rk4,
            dt: None,
            tmax: None,
            format: TrajectoryFormat::Csv,
            seed: 0,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    /// Existing trajectory (.csv or .json); otherwise the flow is run from the flags.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Comma-separated: gram, critical
    #[arg(long, value_delimiter = ',', default_values_t = vec!["gram".to_string(), "critical".to_string()])]
    pub certificates: Vec<String>,
    #[arg(long = "tol-gram", default_value_t = DEFAULT_TOL_GRAM)]
    pub tol_gram: f64,
    #[arg(long = "tol-stat", default_value_t = DEFAULT_TOL_STAT)]
    pub tol_stat: f64,
    #[arg(long = "tol-feas", default_value_t = DEFAULT_TOL_FEAS)]
    pub tol_feas: f64,
    /// Report output path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A fully resolved flow: problem, start, field, λ and integrator settings.
#[derive(Debug)]
pub struct ResolvedFlow {
    pub spec: ProblemSpec,
    pub problem: ProblemInstance,
    pub x0: FullRankMatrix,
    pub field: FieldKind,
    pub params: LandingParams,
    pub cfg: IntegratorConfig,
}

impl FlowArgs {
    pub fn resolve(&self) -> Result<ResolvedFlow> {
        let mut spec = ProblemSpec::resolve(&self.problem)?;
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        let file = spec.run.clone().unwrap_or_default();
        let lambda = self.lambda.or(file.lambda).unwrap_or(1.0);
        let params = LandingParams::new(lambda)?;
        let mut cfg = IntegratorConfig::for_lambda(lambda);
        if let Some(s) = self.integrator.or(file.integrator) {
            cfg.scheme = s;
        }
        if let Some(dt) = self.dt.or(file.dt) {
            cfg.dt = dt;
        }
        if let Some(t) = self.tmax.or(file.tmax) {
            cfg.t_max = t;
        }
        if let Some(k) = self.record_every.or(file.record_every) {
            cfg.record_every = k;
        }
        if let Some(tol) = self.residual_tol.or(file.residual_tol) {
            cfg.residual_tol = tol;
        }
        cfg.validate()?;
        let field = self.field.or(file.field).unwrap_or(FieldKind::Landing);
        let problem = spec.build()?;
        let x0 = spec.initial_point()?;
        Ok(ResolvedFlow {
            spec,
            problem,
            x0,
            field,
            params,
            cfg,
        })
    }
}

impl ResolvedFlow {
    pub fn integrate(&self) -> Result<Trajectory> {
        integrate(&self.x0, self.field, self.problem.objective(), &self.params, &self.cfg)
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::RankFailure { .. }
        | Error::NonmonotonePenalty { .. }
        | Error::StepSizeUnderflow { .. }
        | Error::NonFinite(_) => EXIT_FLOW_FAILED,
        _ => EXIT_INVALID,
    }
}

fn summary_line(traj: &Trajectory) -> String {
    let last = traj.last();
    format!(
        "t={:?} f={:?} penalty={:?} residual={:?} samples={} terminated_by={}",
        last.t,
        last.f,
        last.penalty,
        last.residual,
        traj.len(),
        traj.terminated_by.map_or("unknown", |t| t.as_str())
    )
}

fn output_format(explicit: Option<TrajectoryFormat>, path: &Path) -> TrajectoryFormat {
    explicit
        .or_else(|| TrajectoryFormat::from_path(path))
        .unwrap_or(TrajectoryFormat::Csv)
}

/// `landing run`.
pub fn cmd_run(args: &RunArgs, stdout: &mut dyn Write) -> i32 {
    let resolved = match args.flow.resolve() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let (traj, failure) = match resolved.integrate() {
        Ok(t) => (Some(t), None),
        Err(e) => (e.partial_trajectory().cloned(), Some(e)),
    };
    if let (Some(traj), Some(path)) = (&traj, &args.out) {
        if let Err(e) = write_trajectory_file(traj, path, output_format(args.format, path)) {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    }
    if let Some(traj) = &traj {
        let _ = writeln!(stdout, "{}", summary_line(traj));
    }
    match failure {
        None => EXIT_OK,
        Some(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Starting points of the St(1, 2) figure: one inside, one outside the unit circle.
pub const FIGURE1_STARTS: [(&str, [f64; 2]); 2] = [("inside", [0.3, -0.4]), ("outside", [1.6, -1.2])];

const FIGURE1_HORIZON: f64 = 20.0;

fn lambda_label(lambda: f64) -> String {
    format!("{lambda}").replace('.', "p")
}

/// `landing figure1`: one trajectory per (λ, start) cell plus `manifest.json`.
pub fn cmd_figure1(args: &Figure1Args, stdout: &mut dyn Write) -> i32 {
    match figure1(args, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn figure1(args: &Figure1Args, stdout: &mut dyn Write) -> Result<i32> {
    if args.lambdas.is_empty() {
        return Err(Error::Config("empty lambda grid".into()));
    }
    let a = DMatrix::from_column_slice(2, 1, &LINEAR21_A);
    let problem = make_linear(2, 1, a)?;
    let mut cells = Vec::new();
    for &lambda in &args.lambdas {
        let params = LandingParams::new(lambda)?;
        let mut cfg = IntegratorConfig::for_lambda(lambda)
            .with_scheme(args.integrator)
            .with_record_every(args.record_every);
        if let Some(dt) = args.dt {
            cfg.dt = dt;
        }
        cfg.t_max = args
            .tmax
            .unwrap_or(FIGURE1_HORIZON * lambda.recip().max(1.0));
        cfg.validate()?;
        for (label, start) in FIGURE1_STARTS {
            cells.push((lambda, params, cfg, label, start));
        }
    }

    let runs = ordered_map(cells.clone(), |(_, params, cfg, _, start)| {
        let x0 = FullRankMatrix::new(DMatrix::from_column_slice(2, 1, &start))?;
        integrate(&x0, FieldKind::Landing, problem.objective(), &params, &cfg)
    });

    std::fs::create_dir_all(&args.out_dir)?;
    let mut manifest_cells = Vec::new();
    let mut all_landed = true;
    for ((lambda, _, cfg, label, start), run) in cells.into_iter().zip(runs) {
        let traj = run?;
        let file = format!(
            "landing_lambda{}_{label}.{}",
            lambda_label(lambda),
            args.format.extension()
        );
        write_trajectory_file(&traj, &args.out_dir.join(&file), args.format)?;
        let last = traj.last();
        all_landed &= last.penalty <= 1e-8;
        manifest_cells.push(json!({
            "lambda": lambda,
            "start": label,
            "x0": start,
            "file": file,
            "dt": cfg.dt,
            "t_max": cfg.t_max,
            "final_t": last.t,
            "final_penalty": last.penalty,
            "final_objective": last.f,
            "final_x": [last.x[(0, 0)], last.x[(1, 0)]],
            "first_t_penalty_below_1e-4": traj.first_time_penalty_below(1e-4),
            "terminated_by": traj.terminated_by.map(|t| t.as_str()),
        }));
        writeln!(stdout, "{file}: {}", summary_line(&traj))?;
    }
    let manifest = json!({
        "figure": "landing flows on St(1,2) minimizing a linear function",
        "parameters_are_toolkit_choices": true,
        "objective": { "kind": "linear", "a": LINEAR21_A },
        "optimizer": [-LINEAR21_A[0], -LINEAR21_A[1]],
        "lambdas": args.lambdas,
        "starts": FIGURE1_STARTS.iter().map(|(l, s)| json!({"label": l, "x0": s})).collect::<Vec<_>>(),
        "integrator": args.integrator.as_str(),
        "format": args.format.extension(),
        "seed": args.seed,
        "cells": manifest_cells,
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(args.out_dir.join("manifest.json"), text)?;
    if !all_landed {
        eprintln!("warning: not every cell reached N <= 1e-8; increase --tmax");
    }
    Ok(EXIT_OK)
}

/// `landing certify`.
pub fn cmd_certify(args: &CertifyArgs, stdout: &mut dyn Write) -> i32 {
    match certify(args, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn certify(args: &CertifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    for c in &args.certificates {
        if c != "gram" && c != "critical" {
            return Err(Error::Config(format!("unknown certificate '{c}' (gram, critical)")));
        }
    }
    let (traj, problem) = match &args.trajectory {
        Some(path) => {
            let field = args.flow.field.unwrap_or(FieldKind::Landing);
            let lambda = args.flow.lambda.unwrap_or(1.0);
            let traj = read_trajectory_file(path, field, lambda)?;
            let wants_critical = args.certificates.iter().any(|c| c == "critical");
            let problem = if wants_critical {
                let mut spec = ProblemSpec::resolve(&args.flow.problem)?;
                if let Some(seed) = args.flow.seed {
                    spec.seed = seed;
                }
                Some(spec.build()?)
            } else {
                None
            };
            (traj, problem)
        }
        None => {
            let resolved = args.flow.resolve()?;
            let traj = resolved.integrate()?;
            (traj, Some(resolved.problem))
        }
    };

    let mut reports: Vec<CertificateReport> = Vec::new();
    for c in &args.certificates {
        match c.as_str() {
            "gram" => reports.push(certify_gram_convergence(&traj, args.tol_gram)),
            "critical" => {
                let problem = problem.as_ref().expect("problem resolved for critical");
                if problem.n() != traj.shape().0 || problem.p() != traj.shape().1 {
                    return Err(Error::dim("trajectory shape does not match the problem"));
                }
                let tol = CriticalTolerances {
                    stat: args.tol_stat,
                    feas: args.tol_feas,
                };
                reports.push(certify_critical_convergence(&traj, problem.objective(), tol)?);
            }
            _ => unreachable!(),
        }
    }
    let mut text = serde_json::to_string_pretty(&reports)?;
    text.push('\n');
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(if reports.iter().any(CertificateReport::is_failure) {
        EXIT_CERTIFICATE_FAILED
    } else {
        EXIT_OK
    })
}

/// Dispatches a parsed command line.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> i32 {
    match &cli.command {
        Command::Run(a) => cmd_run(a, stdout),
        Command::Figure1(a) => cmd_figure1(a, stdout),
        Command::Certify(a) => cmd_certify(a, stdout),
    }
}

/// Parses `std::env::args` and runs; clap itself exits with 2 on bad usage.
pub fn main_from_env() -> i32 {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    execute(&cli, &mut lock)
}
