use std::fmt::Write as _;

use nodesolve::krylov::SolveStats;
use serde::Serialize;

use crate::config::{ProblemSource, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    /// Seconds, microsecond resolution.
    pub symbolic: f64,
    /// Mean over repetitions.
    pub numeric: f64,
    pub solve: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BtfCensus {
    pub blocks: usize,
    pub largest: usize,
    pub singletons: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FactorStats {
    /// `nnz(L + U) / n`, unit diagonal of `L` not counted.
    pub nnz_per_row: f64,
    pub perturbed_pivots: usize,
    pub btf: Option<BtfCensus>,
    /// Pivoting domains per dissection level, leaves first.
    pub nd_levels: Vec<usize>,
    /// Pattern residual after each FastILU sweep.
    pub ilu_residuals: Vec<f64>,
    pub ilu_shift: Option<f64>,
    pub trsv_setup_flops: Option<u64>,
    pub trsv_kernel_launches: Option<usize>,
    pub refinement_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub phase: String,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
    pub threads: usize,
}

impl Environment {
    pub fn current(threads: usize) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub environment: Environment,
    pub problem: String,
    pub n: usize,
    pub nnz: usize,
    pub timings: Timings,
    pub factor: FactorStats,
    /// Krylov statistics of the last repetition.
    pub gmres: Option<SolveStats>,
    /// `||b - A x|| / ||b||` of the last repetition.
    pub rel_residual: Option<f64>,
    pub failure: Option<Failure>,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    /// Copy with timings zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        Self { timings: Timings::default(), ..self.clone() }
    }

    pub fn iterations(&self) -> Option<usize> {
        self.gmres.as_ref().map(|s| s.iterations)
    }
}

/// One CSV row. Lists are joined with `;`, absent values are empty.
#[derive(Serialize)]
struct CsvRow {
    schema_version: u32,
    problem: String,
    n: usize,
    nnz: usize,
    solver: &'static str,
    level_k: usize,
    sweeps: usize,
    warmup: bool,
    damping: f64,
    shift: f64,
    variant: u8,
    trsv_sweeps: Option<usize>,
    pivot_tol: f64,
    nd_leaves: usize,
    threads: usize,
    reps: usize,
    status: &'static str,
    failure_phase: Option<String>,
    failure_cause: Option<String>,
    symbolic_s: f64,
    numeric_s: f64,
    solve_s: f64,
    iterations: Option<usize>,
    restarts: Option<usize>,
    converged: Option<bool>,
    rel_residual: Option<f64>,
    nnz_per_row: f64,
    perturbed_pivots: usize,
    btf_blocks: Option<usize>,
    btf_largest: Option<usize>,
    btf_singletons: Option<usize>,
    nd_levels: String,
    ilu_residuals: String,
    trsv_setup_flops: Option<u64>,
    trsv_kernel_launches: Option<usize>,
}

fn joined<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

impl From<&RunReport> for CsvRow {
    fn from(r: &RunReport) -> Self {
        let c = &r.config;
        Self {
            schema_version: r.schema_version,
            problem: r.problem.clone(),
            n: r.n,
            nnz: r.nnz,
            solver: c.solver.name(),
            level_k: c.level_k,
            sweeps: c.fastilu.sweeps,
            warmup: c.fastilu.warmup,
            damping: c.fastilu.damping,
            shift: c.fastilu.shift,
            variant: c.variant.number(),
            trsv_sweeps: c.trsv_sweeps,
            pivot_tol: c.lu.pivot_tol,
            nd_leaves: c.lu.nd_leaves,
            threads: c.threads,
            reps: c.reps,
            status: if r.succeeded() { "ok" } else { "failed" },
            failure_phase: r.failure.as_ref().map(|f| f.phase.clone()),
            failure_cause: r.failure.as_ref().map(|f| f.cause.clone()),
            symbolic_s: r.timings.symbolic,
            numeric_s: r.timings.numeric,
            solve_s: r.timings.solve,
            iterations: r.gmres.as_ref().map(|s| s.iterations),
            restarts: r.gmres.as_ref().map(|s| s.restarts),
            converged: r.gmres.as_ref().map(|s| s.converged),
            rel_residual: r.rel_residual,
            nnz_per_row: r.factor.nnz_per_row,
            perturbed_pivots: r.factor.perturbed_pivots,
            btf_blocks: r.factor.btf.as_ref().map(|b| b.blocks),
            btf_largest: r.factor.btf.as_ref().map(|b| b.largest),
            btf_singletons: r.factor.btf.as_ref().map(|b| b.singletons),
            nd_levels: joined(&r.factor.nd_levels),
            ilu_residuals: joined(&r.factor.ilu_residuals),
            trsv_setup_flops: r.factor.trsv_setup_flops,
            trsv_kernel_launches: r.factor.trsv_kernel_launches,
        }
    }
}

/// Header plus one row per report. An empty slice still yields the header.
pub fn to_csv(reports: &[RunReport]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let header = csv_header();
    w.write_record(&header).expect("in-memory write");
    for r in reports {
        w.serialize(CsvRow::from(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv is utf-8")
}

fn csv_header() -> Vec<&'static str> {
    vec![
        "schema_version", "problem", "n", "nnz", "solver", "level_k", "sweeps", "warmup", "damping", "shift", "variant",
        "trsv_sweeps", "pivot_tol", "nd_leaves", "threads", "reps", "status", "failure_phase", "failure_cause",
        "symbolic_s", "numeric_s", "solve_s", "iterations", "restarts", "converged", "rel_residual", "nnz_per_row",
        "perturbed_pivots", "btf_blocks", "btf_largest", "btf_singletons", "nd_levels", "ilu_residuals",
        "trsv_setup_flops", "trsv_kernel_launches",
    ]
}

pub fn to_json(reports: &[RunReport]) -> String {
    match reports {
        [one] => serde_json::to_string_pretty(one),
        many => serde_json::to_string_pretty(many),
    }
    .expect("reports serialize")
}

fn source_label(c: &RunConfig) -> String {
    match &c.source {
        ProblemSource::Matrix { path, .. } => path.display().to_string(),
        ProblemSource::Generated(s) => format!("{} n={} seed={}", s.kind.name(), s.n, s.seed),
    }
}

pub fn to_human(reports: &[RunReport]) -> String {
    let mut out = String::new();
    if let [r] = reports {
        let c = &r.config;
        let _ = writeln!(out, "problem      {} ({} rows, {} nonzeros)", source_label(c), r.n, r.nnz);
        let _ = writeln!(out, "solver       {}", c.solver.name());
        if let Some(f) = &r.failure {
            let _ = writeln!(out, "FAILED       in {}: {}", f.phase, f.cause);
        }
        let t = &r.timings;
        let _ = writeln!(out, "time (s)     symbolic {:.6}  numeric {:.6}  solve {:.6}", t.symbolic, t.numeric, t.solve);
        let _ = writeln!(out, "nnz/n        {:.2}", r.factor.nnz_per_row);
        if let Some(b) = &r.factor.btf {
            let _ = writeln!(out, "btf blocks   {} (largest {}, {} of size 1)", b.blocks, b.largest, b.singletons);
        }
        if !r.factor.nd_levels.is_empty() {
            let _ = writeln!(out, "nd levels    {:?}", r.factor.nd_levels);
        }
        if r.factor.perturbed_pivots > 0 {
            let _ = writeln!(out, "perturbed    {}", r.factor.perturbed_pivots);
        }
        if let Some(s) = &r.gmres {
            let _ = writeln!(out, "gmres        {} iterations, {} restarts, converged {}", s.iterations, s.restarts, s.converged);
        }
        if let Some(res) = r.rel_residual {
            let _ = writeln!(out, "residual     {res:.3e}");
        }
        return out;
    }
    let _ = writeln!(out, "{:<14} {:>2} {:>6} {:>6} {:>2} {:>6} {:>8} {:>10} {:>10}", "solver", "k", "sweeps", "warmup", "v", "nnz/n", "iters", "residual", "status");
    for r in reports {
        let c = &r.config;
        let iters = r.iterations().map_or("-".to_string(), |i| i.to_string());
        let res = r.rel_residual.map_or("-".to_string(), |v| format!("{v:.2e}"));
        let status = r.failure.as_ref().map_or("ok".to_string(), |f| format!("failed ({})", f.phase));
        let _ = writeln!(
            out,
            "{:<14} {:>2} {:>6} {:>6} {:>2} {:>6.2} {:>8} {:>10} {:>10}",
            c.solver.name(),
            c.level_k,
            c.fastilu.sweeps,
            c.fastilu.warmup,
            c.variant.number(),
            r.factor.nnz_per_row,
            iters,
            res,
            status
        );
    }
    out
}
