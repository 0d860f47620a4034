use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use sphapprox::experiment::{self, ExperimentConfig, ExperimentId, PointSource};
use sphapprox::io::{self as files, fmt_float, write_atomically};
use sphapprox_core::analysis::{sup_error, ErrorMask};
use sphapprox_core::approximation::{build_orthonormal_basis, filtered_hyper_fit, hyper_fit, ls_fit, ray, vp_mean_fit};
use sphapprox_core::functions::{test_function, TEST_FUNCTION_NAMES};
use sphapprox_core::geometry::{generate_spiral, mesh_report};
use sphapprox_core::quadrature::solve_weights;
use sphapprox_core::PointSet;

/// Polynomial approximation on the sphere: point sets, positive quadrature,
/// least squares, de la Vallée Poussin means and hyperinterpolation.
///
/// Spiral sets replace extremal point systems throughout; extremal sets can
/// be loaded from points files. Default degree ranges stay at desk scale
/// (n ≤ 25 for least squares, n ≤ 20 for the filtered operators).
#[derive(Parser, Debug)]
#[command(name = "sphapprox", version, about)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate or inspect point sets.
    #[command(subcommand)]
    Points(PointsCommand),
    /// Positive quadrature weights.
    #[command(subcommand)]
    Quad(QuadCommand),
    /// Fit a test function and report its sup error over a spiral grid.
    Fit(FitArgs),
    /// Reproduce one of the experiments as a CSV table.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand, Debug)]
enum PointsCommand {
    /// Write a point set file.
    Gen {
        #[arg(long, value_enum, default_value_t = PointKind::Spiral)]
        kind: PointKind,
        /// Number of points (spiral only).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        count: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Separation, mesh-norm estimate and mesh ratio as CSV.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        /// Mesh norm grid size as a multiple of the node count.
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
        eval_factor: u64,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PointKind {
    Spiral,
    Octahedron,
}

#[derive(Subcommand, Debug)]
enum QuadCommand {
    /// Minimum-norm weights exact to degree MU; fails unless they are
    /// positive and exact.
    Solve {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_name = "MU")]
        exactness: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Ls,
    Vp,
    Hyper,
    Fhyper,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, value_enum)]
    op: Op,
    #[arg(long)]
    points: PathBuf,
    /// Weights file (required for hyper and fhyper).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Test function name.
    #[arg(long = "fn", value_parser = clap::builder::PossibleValuesParser::new(TEST_FUNCTION_NAMES))]
    function: String,
    #[arg(long)]
    degree: usize,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[arg(long)]
    out: PathBuf,
    /// Error grid size as a multiple of the node count.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    eval_factor: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ExperimentName {
    #[value(name = "fig-lebesgue")]
    Lebesgue,
    #[value(name = "fig-vp")]
    Vp,
    #[value(name = "fig-gibbs")]
    Gibbs,
    #[value(name = "fig-mesh")]
    Mesh,
}

impl From<ExperimentName> for ExperimentId {
    fn from(e: ExperimentName) -> Self {
        match e {
            ExperimentName::Lebesgue => ExperimentId::Lebesgue,
            ExperimentName::Vp => ExperimentId::Vp,
            ExperimentName::Gibbs => ExperimentId::Gibbs,
            ExperimentName::Mesh => ExperimentId::Mesh,
        }
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(value_enum)]
    id: ExperimentName,
    /// Comma-separated degrees (defaults depend on the experiment).
    #[arg(long = "n", value_delimiter = ',')]
    degrees: Vec<usize>,
    /// Comma-separated θ values in [0, 1].
    #[arg(long = "theta", value_delimiter = ',')]
    thetas: Vec<f64>,
    /// `spiral` or a points file used for every degree.
    #[arg(long, default_value = "spiral")]
    source: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    eval_factor: Option<u64>,
    /// Node count multiple of (μ+1)² for spiral sets that carry a rule.
    #[arg(long, default_value_t = experiment::DEFAULT_OVERSAMPLE)]
    oversample: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage_error(kind: ErrorKind, msg: &str) -> ! {
    Cli::command().error(kind, msg).exit()
}

fn emit(out: Option<&Path>, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match out {
        Some(path) => write_atomically(path, fill),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            fill(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn points(cmd: PointsCommand) -> Result<()> {
    match cmd {
        PointsCommand::Gen { kind, count, out } => {
            let ps = match (kind, count) {
                (PointKind::Spiral, Some(n)) => generate_spiral(n as usize)?,
                (PointKind::Spiral, None) => {
                    usage_error(ErrorKind::MissingRequiredArgument, "--count is required for spiral sets")
                }
                (PointKind::Octahedron, _) => PointSet::octahedron(),
            };
            files::save_points(&ps, &out)?;
            log::info!("wrote {} points to {}", ps.len(), out.display());
        }
        PointsCommand::Stats { input, eval_factor, out } => {
            let ps = files::load_points(&input)?;
            let grid = generate_spiral(eval_factor as usize * ps.len())?;
            let r = mesh_report(&ps, &grid)?;
            emit(out.as_deref(), |w| {
                writeln!(w, "# points: {}", input.display())?;
                writeln!(w, "points,eval_count,separation,mesh_norm,mesh_ratio")?;
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    ps.len(),
                    r.eval_count,
                    fmt_float(r.separation),
                    fmt_float(r.mesh_norm_estimate),
                    fmt_float(r.mesh_ratio)
                )
            })?;
        }
    }
    Ok(())
}

fn quad(cmd: QuadCommand) -> Result<()> {
    let QuadCommand::Solve { points, exactness, out } = cmd;
    let ps = files::load_points(&points)?;
    let rule = solve_weights(&ps, exactness)
        .with_context(|| format!("no positive rule of exactness {exactness} on {}", points.display()))?;
    files::save_weights(&rule, &out)?;
    println!(
        "points={} exactness={} residual={} min_weight={} max_weight={}",
        rule.len(),
        rule.exactness(),
        fmt_float(rule.residual()),
        fmt_float(rule.weights().iter().copied().fold(f64::INFINITY, f64::min)),
        fmt_float(rule.max_weight())
    );
    Ok(())
}

fn fit(args: FitArgs) -> Result<()> {
    let needs_rule = matches!(args.op, Op::Hyper | Op::Fhyper);
    if needs_rule && args.weights.is_none() {
        usage_error(ErrorKind::MissingRequiredArgument, "--weights is required for --op hyper and --op fhyper");
    }
    if !(0.0..=1.0).contains(&args.theta) {
        usage_error(ErrorKind::ValueValidation, "--theta must lie in [0, 1]");
    }
    let f = test_function(&args.function).expect("validated by the parser");
    let nodes = files::load_points(&args.points)?;
    let samples: Vec<f64> = nodes.iter().map(|p| f.eval(p)).collect();
    let n = args.degree;
    let approx = match args.op {
        Op::Ls => ls_fit(&build_orthonormal_basis(&nodes, n)?, &samples)?,
        Op::Vp => {
            let basis = build_orthonormal_basis(&nodes, n + ray(n, args.theta)?)?;
            vp_mean_fit(&basis, &samples, n, args.theta)?
        }
        Op::Hyper | Op::Fhyper => {
            let path = args.weights.as_deref().expect("checked above");
            let wf = files::load_weights(path)?;
            files::ensure_same_points(&nodes, &wf.points, 1e-12)
                .with_context(|| format!("{} does not match {}", path.display(), args.points.display()))?;
            let rule = wf.into_rule()?;
            if args.op == Op::Hyper {
                hyper_fit(&rule, &samples, n)?
            } else {
                filtered_hyper_fit(&rule, &samples, n, args.theta)?
            }
        }
    };
    files::save_approximant(&approx, &args.out)?;

    let grid = generate_spiral(args.eval_factor as usize * nodes.len())?;
    let mask = f.singular_circle.map(|circle| ErrorMask {
        circle,
        radius: experiment::GIBBS_MASK_RADIUS,
    });
    let r = sup_error(&approx, &f.eval, &grid, mask.as_ref());
    println!("operator,function,n,theta,m,points,eval_count,sup_error,masked_sup_error");
    println!(
        "{},{},{},{:?},{},{},{},{},{}",
        approx.tag,
        f.name,
        n,
        args.theta,
        approx.m,
        nodes.len(),
        r.eval_count,
        fmt_float(r.sup_error),
        fmt_float(r.masked_sup_error)
    );
    Ok(())
}

fn run_experiment(args: ExperimentArgs) -> Result<()> {
    let id = ExperimentId::from(args.id);
    let mut cfg = ExperimentConfig::new(id);
    if !args.degrees.is_empty() {
        cfg.degrees = args.degrees;
    }
    if !args.thetas.is_empty() {
        cfg.thetas = args.thetas;
    }
    cfg.source = PointSource::parse(&args.source);
    if let Some(k) = args.eval_factor {
        cfg.eval_factor = k as usize;
    }
    cfg.oversample = args.oversample;
    cfg.seed = args.seed;
    if let Err(e) = cfg.validate() {
        usage_error(ErrorKind::ValueValidation, &e.to_string());
    }
    let report = experiment::run(&cfg)?;
    emit(args.out.as_deref(), |w| report.write_csv(w))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Points(cmd) => points(cmd),
        Command::Quad(cmd) => quad(cmd),
        Command::Fit(args) => fit(args),
        Command::Experiment(args) => run_experiment(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
