mod common;

use common::*;
use nodesolve::lu::{numeric_factorize, symbolic_analyze, SolverOptions};
use nodesolve::ordering::btf_decompose;
use nodesolve::problems::{generate, ProblemKind, ProblemSpec};
use nodesolve::Error;

fn is_symmetric(a: &Dense) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| a[i][j] == a[j][i]))
}

#[test]
fn eigen_oracle_sanity() {
    let ev = symmetric_eigenvalues(&vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
    assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
}

#[test]
fn laplace_on_two_cubed_grid() {
    let p = generate(&ProblemSpec::laplace3d(2, 0)).unwrap();
    assert_eq!((p.a.nrows(), p.a.ncols()), (8, 8));
    assert_eq!(p.a.diagonal(), vec![6.0; 8]);
    for i in 0..8 {
        let (cols, vals) = p.a.row(i);
        let off: Vec<f64> = cols.iter().zip(vals).filter(|(&j, _)| j != i).map(|(_, &v)| v).collect();
        // every node of a 2x2x2 grid is a corner with three neighbors
        assert_eq!(off, vec![-1.0; 3]);
    }
}

#[test]
fn laplace_interior_row_has_six_neighbors() {
    let p = generate(&ProblemSpec::laplace3d(3, 0)).unwrap();
    let center = 13;
    let (cols, vals) = p.a.row(center);
    assert_eq!(cols.len(), 7);
    let off: f64 = cols.iter().zip(vals).filter(|(&j, _)| j != center).map(|(_, v)| v).sum();
    assert_eq!(off, -6.0);
}

#[test]
fn stencil27_density_and_definiteness() {
    let big = generate(&ProblemSpec::stencil27(16, 1)).unwrap();
    assert_eq!(big.a.nrows(), 4096);
    assert!(big.a.nnz() as f64 / big.a.nrows() as f64 <= 27.0);
    let interior = 16 * (16 * 8 + 8) + 8;
    assert_eq!(big.a.row(interior).0.len(), 27);

    let small = generate(&ProblemSpec::stencil27(4, 1)).unwrap();
    let d = to_dense(&small.a);
    assert!(is_symmetric(&d));
    assert!(symmetric_eigenvalues(&d)[0] > 0.0);
}

#[test]
fn elasticity_is_spd_vector_operator() {
    let p = generate(&ProblemSpec::elasticity(3, 2)).unwrap();
    assert_eq!(p.a.nrows(), 81);
    let d = to_dense(&p.a);
    let sym = (0..81).all(|i| (0..81).all(|j| (d[i][j] - d[j][i]).abs() <= 1e-15));
    assert!(sym);
    assert!(symmetric_eigenvalues(&d)[0] > 0.0);
    // displacement components of neighboring nodes are coupled
    assert!(p.a.get(0, 3 * 13 + 1).is_some_and(|v| v != 0.0));
    let interior = 3 * 13;
    assert_eq!(p.a.row(interior).0.len(), 81);
}

#[test]
fn circuit_recovers_planted_blocks() {
    for seed in 0..10 {
        let p = generate(&ProblemSpec::circuit(60, 5, seed)).unwrap();
        let btf = btf_decompose(&p.a).unwrap();
        assert_eq!(btf.num_blocks(), 6, "seed {seed}");
        let mut sizes = btf.block_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 1, 1, 1, 55]);

        let plan = symbolic_analyze(&p.a, &SolverOptions::default()).unwrap();
        let f = numeric_factorize(&plan, &p.a).unwrap();
        let x = f.solve_vec(&p.b).unwrap();
        assert!(rel_diff(&x, &p.x_true) <= 1e-10);
    }
}

#[test]
fn circuit_pattern_is_permuted() {
    let p = generate(&ProblemSpec::circuit(40, 4, 3)).unwrap();
    let on_diag = (0..40).filter(|&i| p.a.get(i, i).is_some()).count();
    assert!(on_diag < 40);
}

#[test]
fn generation_is_deterministic() {
    for kind in [ProblemKind::Laplace3d7pt, ProblemKind::Stencil3d27pt, ProblemKind::Elasticity3d27ptVector, ProblemKind::CircuitLike] {
        let spec = ProblemSpec::with_defaults(kind, 5, 42);
        let p = generate(&spec).unwrap();
        let q = generate(&spec).unwrap();
        assert_eq!(p.a, q.a);
        assert_eq!(p.b, q.b);
        assert_eq!(p.x_true, q.x_true);
        let r = generate(&ProblemSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(p.x_true, r.x_true);
        assert!(p.x_true.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(p.a.spmv(&p.x_true).unwrap(), p.b);
        assert_eq!(p.a.nrows(), spec.rows());
    }
}

#[test]
fn invalid_specs_rejected() {
    let bad = [
        ProblemSpec::laplace3d(0, 0),
        ProblemSpec::circuit(10, 10, 0),
        ProblemSpec { dofs_per_node: 2, ..ProblemSpec::elasticity(3, 0) },
        ProblemSpec { dofs_per_node: 3, ..ProblemSpec::laplace3d(3, 0) },
        ProblemSpec { small_blocks: 2, ..ProblemSpec::stencil27(3, 0) },
    ];
    for spec in bad {
        assert!(matches!(generate(&spec), Err(Error::InvalidOption(_))), "{spec:?}");
    }
    assert!("banana".parse::<ProblemKind>().is_err());
    assert_eq!("circuit_like".parse::<ProblemKind>().unwrap(), ProblemKind::CircuitLike);
}
