use std::path::PathBuf;

use nodesolve::fastilu::FastIluParams;
use nodesolve::krylov::GmresConfig;
use nodesolve::lu::SolverOptions;
use nodesolve::problems::ProblemSpec;
use nodesolve::sptrsv::{TrsvOptions, TrsvVariant};
use nodesolve::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSource {
    /// Matrix Market file; the right-hand side is `A x` for a seeded random `x`.
    Matrix { path: PathBuf, seed: u64 },
    Generated(ProblemSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    DirectLu,
    IluGmres,
    FastiluGmres,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::DirectLu => "direct_lu",
            SolverKind::IluGmres => "ilu_gmres",
            SolverKind::FastiluGmres => "fastilu_gmres",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    #[default]
    Human,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: ProblemSource,
    pub solver: SolverKind,
    pub lu: SolverOptions,
    pub variant: TrsvVariant,
    pub trsv: TrsvOptions,
    /// Fill level of the incomplete factorizations.
    pub level_k: usize,
    pub fastilu: FastIluParams,
    /// Jacobi sweeps per triangular solve when applying ILU factors; `None`
    /// applies them by exact substitution.
    pub trsv_sweeps: Option<usize>,
    pub gmres: GmresConfig,
    pub threads: usize,
    /// Numeric + solve repetitions after the single symbolic phase.
    pub reps: usize,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn new(source: ProblemSource, solver: SolverKind) -> Self {
        Self {
            source,
            solver,
            lu: SolverOptions::default(),
            variant: TrsvVariant::V1,
            trsv: TrsvOptions::default(),
            level_k: 0,
            fastilu: FastIluParams::default(),
            trsv_sweeps: None,
            gmres: GmresConfig::default(),
            threads: 1,
            reps: 1,
            output: None,
            format: OutputFormat::Human,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::InvalidOption("thread count must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidOption("reps must be at least 1".into()));
        }
        if let ProblemSource::Generated(spec) = &self.source {
            spec.validate()?;
        }
        self.lu.validate()?;
        self.fastilu.validate()?;
        self.gmres.validate()
    }
}

/// Cartesian parameter grid over a base configuration. An empty axis gives
/// an empty grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub solvers: Vec<SolverKind>,
    pub level_k: Vec<usize>,
    pub sweeps: Vec<usize>,
    pub warmup: Vec<bool>,
    pub variants: Vec<TrsvVariant>,
}

impl SweepGrid {
    /// Grid holding only the base configuration's values.
    pub fn single(base: &RunConfig) -> Self {
        Self {
            solvers: vec![base.solver],
            level_k: vec![base.level_k],
            sweeps: vec![base.fastilu.sweeps],
            warmup: vec![base.fastilu.warmup],
            variants: vec![base.variant],
        }
    }

    pub fn points(&self, base: &RunConfig) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &solver in &self.solvers {
            for &k in &self.level_k {
                for &sweeps in &self.sweeps {
                    for &warmup in &self.warmup {
                        for &variant in &self.variants {
                            let mut c = base.clone();
                            c.solver = solver;
                            c.level_k = k;
                            c.fastilu.sweeps = sweeps;
                            c.fastilu.warmup = warmup;
                            c.variant = variant;
                            out.push(c);
                        }
                    }
                }
            }
        }
        out
    }
}
