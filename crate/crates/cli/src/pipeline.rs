use std::time::Instant;

use nodesolve::fastilu::{fastilu_numeric, ilu_symbolic, standard_ilu_numeric, FastIluApply, IluFactors};
use nodesolve::krylov::{gmres, LinearOperator, SolveStats};
use nodesolve::lu::{iterative_refinement, numeric_factorize, symbolic_analyze, LuFactors};
use nodesolve::problems::generate;
use nodesolve::sparse::read_matrix_market_file;
use nodesolve::sptrsv::LuTriangularSolver;
use nodesolve::{CsrMatrix, Error, Execution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ProblemSource, RunConfig, SolverKind};
use crate::report::{BtfCensus, Environment, Failure, FactorStats, RunReport, Timings, SCHEMA_VERSION};

struct Loaded {
    name: String,
    a: CsrMatrix,
    b: Vec<f64>,
}

fn load(source: &ProblemSource) -> nodesolve::Result<Loaded> {
    match source {
        ProblemSource::Matrix { path, seed } => {
            let a = read_matrix_market_file(path)?;
            a.require_square()?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let x: Vec<f64> = (0..a.ncols()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let b = a.spmv(&x)?;
            Ok(Loaded { name: path.display().to_string(), a, b })
        }
        ProblemSource::Generated(spec) => {
            let p = generate(spec)?;
            Ok(Loaded { name: spec.kind.name().to_string(), a: p.a, b: p.b })
        }
    }
}

fn seconds(t: Instant) -> f64 {
    (t.elapsed().as_secs_f64() * 1e6).round() / 1e6
}

fn rel_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> nodesolve::Result<f64> {
    let ax = a.spmv(x)?;
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt();
    let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(if bn == 0.0 { r } else { r / bn })
}

struct Phase(&'static str);

impl Phase {
    fn fail(&self, e: Error) -> Failure {
        Failure { phase: self.0.to_string(), cause: e.to_string() }
    }
}

struct Outcome {
    timings: Timings,
    factor: FactorStats,
    gmres: Option<SolveStats>,
    rel_residual: Option<f64>,
}

fn lu_stats(f: &LuFactors) -> FactorStats {
    let sizes: Vec<usize> = (0..f.num_blocks()).map(|k| f.block_range(k).len()).collect();
    let mut nd_levels: Vec<usize> = Vec::new();
    for b in f.blocks.iter().filter(|b| b.domains.len() > 1) {
        for (lvl, doms) in b.domain_levels.iter().enumerate() {
            if nd_levels.len() <= lvl {
                nd_levels.resize(lvl + 1, 0);
            }
            nd_levels[lvl] += doms.len();
        }
    }
    FactorStats {
        nnz_per_row: f.nnz_lu() as f64 / f.n().max(1) as f64,
        perturbed_pivots: f.perturbed_pivots.len(),
        btf: Some(BtfCensus {
            blocks: sizes.len(),
            largest: sizes.iter().copied().max().unwrap_or(0),
            singletons: sizes.iter().filter(|&&s| s == 1).count(),
        }),
        nd_levels,
        ..FactorStats::default()
    }
}

fn direct(cfg: &RunConfig, p: &Loaded, exec: Execution) -> Result<Outcome, Failure> {
    let mut lu_opts = cfg.lu.clone();
    lu_opts.execution = exec;
    let mut trsv_opts = cfg.trsv;
    trsv_opts.execution = exec;

    let t = Instant::now();
    let plan = symbolic_analyze(&p.a, &lu_opts).map_err(|e| Phase("symbolic").fail(e))?;
    let mut timings = Timings { symbolic: seconds(t), ..Timings::default() };
    let mut last = None;
    for _ in 0..cfg.reps {
        let t = Instant::now();
        let f = numeric_factorize(&plan, &p.a).map_err(|e| Phase("numeric").fail(e))?;
        timings.numeric += seconds(t);
        let t = Instant::now();
        let solver = LuTriangularSolver::setup(&f, cfg.variant, trsv_opts).map_err(|e| Phase("solve").fail(e))?;
        let mut x = solver.solve_vec(&p.b).map_err(|e| Phase("solve").fail(e))?;
        let (flops, launches) = (solver.setup_flops(), solver.kernel_launches());
        let mut steps = None;
        if !f.perturbed_pivots.is_empty() {
            let r = iterative_refinement(&p.a, &f, &p.b, 5, 1e-12).map_err(|e| Phase("refinement").fail(e))?;
            steps = Some(r.steps);
            x = r.x;
        }
        timings.solve += seconds(t);
        let mut stats = lu_stats(&f);
        stats.trsv_setup_flops = Some(flops);
        stats.trsv_kernel_launches = Some(launches);
        stats.refinement_steps = steps;
        last = Some((stats, x));
    }
    let (factor, x) = last.expect("reps >= 1");
    let res = rel_residual(&p.a, &x, &p.b).map_err(|e| Phase("solve").fail(e))?;
    Ok(Outcome { timings: averaged(timings, cfg.reps), factor, gmres: None, rel_residual: Some(res) })
}

fn averaged(mut t: Timings, reps: usize) -> Timings {
    t.numeric = (t.numeric / reps as f64 * 1e6).round() / 1e6;
    t.solve = (t.solve / reps as f64 * 1e6).round() / 1e6;
    t
}

fn incomplete(cfg: &RunConfig, p: &Loaded, exec: Execution) -> Result<Outcome, Failure> {
    let t = Instant::now();
    let pattern = ilu_symbolic(&p.a, cfg.level_k).map_err(|e| Phase("symbolic").fail(e))?;
    let mut timings = Timings { symbolic: seconds(t), ..Timings::default() };
    let mut last = None;
    for _ in 0..cfg.reps {
        let t = Instant::now();
        let f: IluFactors = match cfg.solver {
            SolverKind::IluGmres => standard_ilu_numeric(&p.a, &pattern, cfg.fastilu.shift),
            _ => fastilu_numeric(&p.a, &pattern, &cfg.fastilu),
        }
        .map_err(|e| Phase("numeric").fail(e))?;
        timings.numeric += seconds(t);

        let t = Instant::now();
        let jacobi;
        let m: &dyn LinearOperator = match cfg.trsv_sweeps {
            Some(s) => {
                jacobi = FastIluApply::new(&f, s, 1.0, exec).map_err(|e| Phase("solve").fail(e))?;
                &jacobi
            }
            None => &f,
        };
        let (x, stats) = gmres(&p.a, m, &p.b, None, &cfg.gmres).map_err(|e| Phase("solve").fail(e))?;
        timings.solve += seconds(t);
        let factor = FactorStats {
            nnz_per_row: f.nnz() as f64 / f.n().max(1) as f64,
            ilu_residuals: f.residuals.clone(),
            ilu_shift: Some(f.shift),
            ..FactorStats::default()
        };
        last = Some((factor, x, stats));
    }
    let (factor, x, stats) = last.expect("reps >= 1");
    let res = rel_residual(&p.a, &x, &p.b).map_err(|e| Phase("solve").fail(e))?;
    if !stats.converged {
        return Err(Failure {
            phase: "solve".into(),
            cause: format!("GMRES stopped after {} iterations at relative residual {:.3e}", stats.iterations, res),
        });
    }
    Ok(Outcome { timings: averaged(timings, cfg.reps), factor, gmres: Some(stats), rel_residual: Some(res) })
}

/// Symbolic phase once, then `reps` numeric + solve repetitions. Failures
/// are recorded in the report rather than returned.
pub fn run(cfg: &RunConfig) -> RunReport {
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        environment: Environment::current(cfg.threads),
        problem: String::new(),
        n: 0,
        nnz: 0,
        timings: Timings::default(),
        factor: FactorStats::default(),
        gmres: None,
        rel_residual: None,
        failure: None,
    };
    if let Err(e) = cfg.validate() {
        report.failure = Some(Phase("config").fail(e));
        return report;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            report.failure = Some(Failure { phase: "config".into(), cause: e.to_string() });
            return report;
        }
    };
    let exec = if cfg.threads > 1 { Execution::Parallel } else { Execution::Sequential };
    pool.install(|| {
        let p = match load(&cfg.source) {
            Ok(p) => p,
            Err(e) => {
                report.failure = Some(Phase("load").fail(e));
                return;
            }
        };
        report.problem = p.name.clone();
        report.n = p.a.nrows();
        report.nnz = p.a.nnz();
        let outcome = match cfg.solver {
            SolverKind::DirectLu => direct(cfg, &p, exec),
            SolverKind::IluGmres | SolverKind::FastiluGmres => incomplete(cfg, &p, exec),
        };
        match outcome {
            Ok(o) => {
                report.timings = o.timings;
                report.factor = o.factor;
                report.gmres = o.gmres;
                report.rel_residual = o.rel_residual;
            }
            Err(f) => report.failure = Some(f),
        }
    });
    report
}

/// One report per grid point; failing points are recorded and the sweep
/// continues.
pub fn sweep(points: &[RunConfig]) -> Vec<RunReport> {
    points.iter().map(run).collect()
}
