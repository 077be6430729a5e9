mod common;

use common::*;
use nodesolve::fastilu::{fastilu_numeric, ilu_symbolic, standard_ilu_numeric, FastIluApply, FastIluParams};
use nodesolve::krylov::{gmres, GmresConfig, Identity, LinearOperator};
use nodesolve::lu::{numeric_factorize, symbolic_analyze, SolverOptions};
use nodesolve::sptrsv::{LuTriangularSolver, TrsvOptions, TrsvVariant};
use nodesolve::{CsrMatrix, Error, Execution};

fn cfg(restart: usize, rel_tol: f64) -> GmresConfig {
    GmresConfig { restart, rel_tol, ..GmresConfig::default() }
}

fn true_rel_resid(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.spmv(x).unwrap();
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| q - p).collect();
    norm2(&r) / norm2(b)
}

#[test]
fn identity_converges_in_one_step() {
    let a = CsrMatrix::identity(10);
    let b: Vec<f64> = (0..10).map(|i| i as f64 - 4.5).collect();
    let (x, s) = gmres(&a, &Identity(10), &b, None, &GmresConfig::default()).unwrap();
    assert_eq!(s.iterations, 1);
    assert!(s.converged);
    assert!(rel_diff(&x, &b) < 1e-15);
}

#[test]
fn distinct_eigenvalues_bound_iterations() {
    let vals = [1.0, 2.0, 5.0];
    let t: Vec<_> = (0..30).map(|i| (i, i, vals[i % 3])).collect();
    let a = CsrMatrix::from_triplets(30, 30, &t).unwrap();
    let b: Vec<f64> = (0..30).map(|i| 1.0 + (i as f64).cos()).collect();
    let (x, s) = gmres(&a, &Identity(30), &b, None, &cfg(10, 1e-12)).unwrap();
    assert!(s.iterations <= 3, "{}", s.iterations);
    assert!(true_rel_resid(&a, &x, &b) <= 1e-12);
}

#[test]
fn solves_nonsymmetric_system() {
    let a = random_sparse(120, 0.05, 3.0, 11);
    let b: Vec<f64> = (0..120).map(|i| (i as f64 * 0.3).sin()).collect();
    let (x, s) = gmres(&a, &Identity(120), &b, None, &cfg(30, 1e-10)).unwrap();
    assert!(s.converged);
    assert!(s.final_rel_resid <= 1e-10);
    assert!((true_rel_resid(&a, &x, &b) - s.final_rel_resid).abs() < 1e-14);
    let oracle = dense_solve(&to_dense(&a), &b).unwrap();
    assert!(rel_diff(&x, &oracle) <= 1e-8);
    assert_eq!(s.resid_history.len(), s.iterations + 1);
    assert!(s.resid_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}

#[test]
fn short_restarts_keep_estimates_honest() {
    let a = laplace7(8, 8, 8);
    let b: Vec<f64> = (0..a.nrows()).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
    let (x, s) = gmres(&a, &Identity(a.nrows()), &b, None, &cfg(5, 1e-8)).unwrap();
    assert!(s.converged);
    assert!(s.restarts > 0);
    assert!(s.max_recurrence_gap <= 1e-8);
    assert!(s.max_orthogonality_loss <= 1e-10);
    assert!(true_rel_resid(&a, &x, &b) <= 1e-8);
}

#[test]
fn reorthogonalization_tightens_the_basis() {
    let a = random_sparse(200, 0.03, 1.2, 5);
    let b = vec![1.0; 200];
    let one = gmres(&a, &Identity(200), &b, None, &cfg(80, 1e-10)).unwrap().1;
    let two = gmres(&a, &Identity(200), &b, None, &GmresConfig { reorthogonalize: true, ..cfg(80, 1e-10) }).unwrap().1;
    assert!(two.max_orthogonality_loss <= one.max_orthogonality_loss.max(1e-14));
    assert!(two.converged && one.converged);
}

#[test]
fn exact_preconditioners_need_one_iteration() {
    let a = random_nonsingular(40, 0.1, 8);
    let b: Vec<f64> = (0..40).map(|i| i as f64).collect();
    let plan = symbolic_analyze(&a, &SolverOptions::default()).unwrap();
    let lu = numeric_factorize(&plan, &a).unwrap();
    let (x, s) = gmres(&a, &lu, &b, None, &cfg(10, 1e-10)).unwrap();
    assert_eq!(s.iterations, 1);
    assert!(true_rel_resid(&a, &x, &b) <= 1e-10);

    let trsv = LuTriangularSolver::setup(&lu, TrsvVariant::V3, TrsvOptions::default()).unwrap();
    let (_, s) = gmres(&a, &trsv, &b, None, &cfg(10, 1e-10)).unwrap();
    assert_eq!(s.iterations, 1);

    let lap = laplace7(3, 3, 3);
    let full = ilu_symbolic(&lap, 27).unwrap();
    let f = standard_ilu_numeric(&lap, &full, 0.0).unwrap();
    let rhs = vec![1.0; 27];
    let (_, s) = gmres(&lap, &f, &rhs, None, &cfg(10, 1e-10)).unwrap();
    assert_eq!(s.iterations, 1);
}

#[test]
fn incomplete_factors_cut_iterations() {
    let a = laplace7(10, 10, 10);
    let b = vec![1.0; a.nrows()];
    let plain = gmres(&a, &Identity(a.nrows()), &b, None, &GmresConfig::default()).unwrap().1;
    let p = ilu_symbolic(&a, 1).unwrap();
    let ilu = standard_ilu_numeric(&a, &p, 0.0).unwrap();
    let exact = gmres(&a, &ilu, &b, None, &GmresConfig::default()).unwrap().1;
    let fast = fastilu_numeric(&a, &p, &FastIluParams { sweeps: 3, ..FastIluParams::default() }).unwrap();
    let jacobi = FastIluApply::new(&fast, 3, 1.0, Execution::Sequential).unwrap();
    let approx = gmres(&a, &jacobi, &b, None, &GmresConfig::default()).unwrap().1;
    assert!(exact.iterations < plain.iterations);
    assert!(approx.iterations < plain.iterations);
    assert!(exact.converged && approx.converged);
}

#[test]
fn trivial_starts() {
    let a = laplace7(3, 3, 2);
    let n = a.nrows();
    let (x, s) = gmres(&a, &Identity(n), &vec![0.0; n], Some(&vec![3.0; n]), &GmresConfig::default()).unwrap();
    assert_eq!(x, vec![0.0; n]);
    assert_eq!(s.iterations, 0);

    let xt: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let b = a.spmv(&xt).unwrap();
    let (x, s) = gmres(&a, &Identity(n), &b, Some(&xt), &GmresConfig::default()).unwrap();
    assert_eq!(s.iterations, 0);
    assert_eq!(x, xt);
}

#[test]
fn iteration_cap_returns_best_iterate() {
    let a = laplace7(10, 10, 10);
    let b = vec![1.0; a.nrows()];
    let (x, s) = gmres(&a, &Identity(a.nrows()), &b, None, &GmresConfig { max_iters: 4, ..cfg(3, 1e-12) }).unwrap();
    assert!(!s.converged);
    assert_eq!(s.iterations, 4);
    assert!((true_rel_resid(&a, &x, &b) - s.final_rel_resid).abs() < 1e-14);
    assert!(s.final_rel_resid < 1.0);
}

struct Failing(usize);

impl LinearOperator for Failing {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, _: &[f64], _: &mut [f64]) -> nodesolve::Result<()> {
        Err(Error::Preconditioner("broken".into()))
    }
}

#[test]
fn errors_propagate() {
    let a = CsrMatrix::identity(4);
    let b = vec![1.0; 4];
    assert!(matches!(gmres(&a, &Failing(4), &b, None, &GmresConfig::default()), Err(Error::Preconditioner(_))));
    assert!(matches!(gmres(&a, &Identity(5), &b, None, &GmresConfig::default()), Err(Error::DimensionMismatch { .. })));
    assert!(matches!(gmres(&a, &Identity(4), &b[..3], None, &GmresConfig::default()), Err(Error::DimensionMismatch { .. })));
    assert!(matches!(gmres(&a, &Identity(4), &b, None, &cfg(0, 1e-6)), Err(Error::InvalidOption(_))));
    assert!(matches!(gmres(&a, &Identity(4), &b, None, &cfg(5, 0.0)), Err(Error::InvalidOption(_))));
}
