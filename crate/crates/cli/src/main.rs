use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nodesolve::fastilu::SweepMode;
use nodesolve::lu::LeafOrdering;
use nodesolve::problems::{ProblemKind, ProblemSpec};
use nodesolve::sptrsv::TrsvVariant;
use nodesolve_cli::{exit, OutputFormat, ProblemSource, RunConfig, RunReport, SolverKind, SweepGrid};

#[derive(Parser)]
#[command(name = "nodesolve", version, about = "Sparse direct and preconditioned iterative solver harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration.
    Run(Opts),
    /// Solve every point of a grid. --solver, --level-k, --sweeps, --warmup
    /// and --variant accept comma-separated lists.
    Sweep(Opts),
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Solver {
    DirectLu,
    IluGmres,
    FastiluGmres,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Problem {
    Laplace3d7pt,
    Stencil3d27pt,
    Elasticity3d27ptVector,
    CircuitLike,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Leaf {
    MinDegree,
    NestedDissection,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Mode {
    InPlace,
    Synchronous,
    Asynchronous,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Args)]
struct Opts {
    /// Matrix Market input file.
    #[arg(long, conflicts_with = "problem")]
    matrix: Option<PathBuf>,
    /// Generated problem family.
    #[arg(long, value_enum)]
    problem: Option<Problem>,
    /// Grid points per side, or the row count for circuit_like.
    #[arg(long, default_value_t = 16)]
    size: usize,
    /// Number of 1x1 BTF blocks for circuit_like (default size/10).
    #[arg(long)]
    small_blocks: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "direct_lu")]
    solver: Vec<Solver>,
    /// ILU fill level k.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    level_k: Vec<usize>,
    /// FastILU sweeps.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    sweeps: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    damping: f64,
    /// Seed FastILU with the ILU(k-1) factors.
    #[arg(long, value_delimiter = ',', num_args = 0..=1, default_value = "false", default_missing_value = "true")]
    warmup: Vec<bool>,
    /// Manteuffel shift alpha.
    #[arg(long, default_value_t = 0.0)]
    shift: f64,
    #[arg(long, value_enum, default_value = "synchronous")]
    sweep_mode: Mode,
    /// Jacobi sweeps per triangular solve; exact substitution when absent.
    #[arg(long)]
    trsv_sweeps: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pivot_tol: f64,
    #[arg(long, default_value_t = 4)]
    nd_leaves: usize,
    #[arg(long, value_enum, default_value = "min_degree")]
    leaf_ordering: Leaf,
    /// Triangular solve variant, 1 to 4.
    #[arg(long, value_delimiter = ',', default_value = "1", value_parser = clap::value_parser!(u8).range(1..=4))]
    variant: Vec<u8>,
    #[arg(long, default_value_t = 60)]
    restart: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

fn source(o: &Opts) -> Result<ProblemSource, String> {
    match (&o.matrix, o.problem) {
        (Some(path), None) => Ok(ProblemSource::Matrix { path: path.clone(), seed: o.seed }),
        (None, Some(p)) => {
            let kind = match p {
                Problem::Laplace3d7pt => ProblemKind::Laplace3d7pt,
                Problem::Stencil3d27pt => ProblemKind::Stencil3d27pt,
                Problem::Elasticity3d27ptVector => ProblemKind::Elasticity3d27ptVector,
                Problem::CircuitLike => ProblemKind::CircuitLike,
            };
            let mut spec = ProblemSpec::with_defaults(kind, o.size, o.seed);
            if let Some(s) = o.small_blocks {
                spec.small_blocks = s;
            }
            Ok(ProblemSource::Generated(spec))
        }
        _ => Err("exactly one of --matrix or --problem is required".into()),
    }
}

fn solver_kind(s: Solver) -> SolverKind {
    match s {
        Solver::DirectLu => SolverKind::DirectLu,
        Solver::IluGmres => SolverKind::IluGmres,
        Solver::FastiluGmres => SolverKind::FastiluGmres,
    }
}

fn variant(v: u8) -> TrsvVariant {
    TrsvVariant::from_number(v).expect("range checked by the parser")
}

fn base_config(o: &Opts) -> Result<RunConfig, String> {
    let mut c = RunConfig::new(source(o)?, solver_kind(o.solver[0]));
    c.level_k = o.level_k[0];
    c.variant = variant(o.variant[0]);
    c.fastilu.sweeps = o.sweeps[0];
    c.fastilu.warmup = o.warmup[0];
    c.fastilu.damping = o.damping;
    c.fastilu.shift = o.shift;
    c.fastilu.mode = match o.sweep_mode {
        Mode::InPlace => SweepMode::InPlace,
        Mode::Synchronous => SweepMode::Synchronous,
        Mode::Asynchronous => SweepMode::Asynchronous,
    };
    c.trsv_sweeps = o.trsv_sweeps;
    c.lu.pivot_tol = o.pivot_tol;
    c.lu.nd_leaves = o.nd_leaves;
    c.lu.leaf_ordering = match o.leaf_ordering {
        Leaf::MinDegree => LeafOrdering::MinDegree,
        Leaf::NestedDissection => LeafOrdering::NestedDissection,
    };
    c.gmres.restart = o.restart;
    c.gmres.rel_tol = o.tol;
    c.gmres.max_iters = o.max_iters;
    c.threads = o.threads;
    c.reps = o.reps;
    c.output = o.output.clone();
    c.format = match o.format {
        Format::Json => OutputFormat::Json,
        Format::Csv => OutputFormat::Csv,
        Format::Human => OutputFormat::Human,
    };
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

fn emit(reports: &[RunReport], cfg: &RunConfig) -> Result<(), String> {
    let text = match cfg.format {
        OutputFormat::Json => nodesolve_cli::to_json(reports) + "\n",
        OutputFormat::Csv => nodesolve_cli::to_csv(reports),
        OutputFormat::Human => nodesolve_cli::to_human(reports),
    };
    match &cfg.output {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(exit::USAGE as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (opts, is_sweep) = match &cli.command {
        Command::Run(o) => (o, false),
        Command::Sweep(o) => (o, true),
    };
    if !is_sweep {
        let lists = [
            ("--solver", opts.solver.len()),
            ("--level-k", opts.level_k.len()),
            ("--sweeps", opts.sweeps.len()),
            ("--warmup", opts.warmup.len()),
            ("--variant", opts.variant.len()),
        ];
        if let Some((flag, _)) = lists.iter().find(|(_, n)| *n != 1) {
            return usage(&format!("{flag} takes a single value with `run`; use `sweep` for lists"));
        }
    }
    let base = match base_config(opts) {
        Ok(c) => c,
        Err(e) => return usage(&e),
    };

    let reports = if is_sweep {
        let grid = SweepGrid {
            solvers: opts.solver.iter().map(|&s| solver_kind(s)).collect(),
            level_k: opts.level_k.clone(),
            sweeps: opts.sweeps.clone(),
            warmup: opts.warmup.clone(),
            variants: opts.variant.iter().map(|&v| variant(v)).collect(),
        };
        nodesolve_cli::sweep(&grid.points(&base))
    } else {
        vec![nodesolve_cli::run(&base)]
    };
    if let Err(e) = emit(&reports, &base) {
        eprintln!("error: {e}");
        return ExitCode::from(exit::SOLVER_FAILURE as u8);
    }
    for r in reports.iter().filter(|r| !r.succeeded()) {
        if let Some(f) = &r.failure {
            eprintln!("{} failed in {}: {}", r.config.solver.name(), f.phase, f.cause);
        }
    }
    let failed = reports.iter().filter(|r| !r.succeeded()).count();
    let code = match (failed, is_sweep) {
        (0, _) => exit::SUCCESS,
        (_, true) => exit::PARTIAL_SWEEP,
        (_, false) => exit::SOLVER_FAILURE,
    };
    ExitCode::from(code as u8)
}
