mod common;

use common::*;
use nodesolve::lu::{
    iterative_refinement, numeric_factorize, symbolic_analyze, LuFactors, SolverOptions,
};
use nodesolve::{CsrMatrix, DenseMultiVector, Error, Execution};
use rand::Rng;

fn factor(a: &CsrMatrix, opts: &SolverOptions) -> LuFactors {
    let plan = symbolic_analyze(a, opts).unwrap();
    numeric_factorize(&plan, a).unwrap()
}

#[test]
fn identity_factors_are_identity() {
    let a = CsrMatrix::identity(5);
    let lu = factor(&a, &SolverOptions::default());
    for b in &lu.blocks {
        assert_eq!(b.l.nnz(), 0);
        assert_eq!(b.u_diag(0), 1.0);
        assert_eq!(b.pivot_rows, vec![0]);
    }
    assert_eq!(lu.solve_vec(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
}

#[test]
fn anti_diagonal_needs_one_swap() {
    let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
    let opts = SolverOptions {
        use_cardinality_matching: false,
        ..Default::default()
    };
    let lu = factor(&a, &opts);
    assert_eq!(lu.num_blocks(), 1);
    let f = &lu.blocks[0];
    assert_eq!(f.pivot_rows, vec![1, 0]);
    assert_eq!(f.l.nnz(), 0);
    assert_eq!(to_dense(&f.u_csr()), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert_eq!(lu.solve_vec(&[3.0, 4.0]).unwrap(), vec![4.0, 3.0]);

    // with the matching the swap moves into the permutation
    let lu = factor(&a, &SolverOptions::default());
    assert_eq!(lu.num_blocks(), 2);
    assert!(lu.blocks.iter().all(|b| b.pivot_rows == vec![0]));
}

#[test]
fn random_12x12_against_dense_oracle() {
    for seed in 0..20 {
        let a = random_nonsingular(12, 0.3, seed);
        let lu = factor(&a, &SolverOptions::default());
        assert!(block_residuals_ok(&a, &lu));

        // full reconstruction ||P A Q - L U|| / ||A|| through the solve
        let d = to_dense(&a);
        let b: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let x = lu.solve_vec(&b).unwrap();
        let oracle = dense_solve(&d, &b).unwrap();
        assert!(rel_diff(&x, &oracle) <= 1e-10, "seed {seed}");
    }
}

#[test]
fn small_solves() {
    let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
    let lu = factor(&a, &SolverOptions::default());
    assert_eq!(lu.solve_vec(&[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    assert!(matches!(lu.solve_vec(&[1.0]), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn three_block_btf_solve() {
    let mut r = rng(7);
    let sizes = [10, 12, 8];
    let n: usize = sizes.iter().sum();
    let mut t = Vec::new();
    let mut start = 0;
    for &s in &sizes {
        for i in start..start + s {
            t.push((i, i, 4.0 + r.gen::<f64>()));
            // cycle keeps the block irreducible
            let next = if i + 1 == start + s { start } else { i + 1 };
            t.push((i, next, r.gen_range(-1.0..1.0)));
            for j in start..start + s {
                if j != i && j != next && r.gen::<f64>() < 0.2 {
                    t.push((i, j, r.gen_range(-1.0..1.0)));
                }
            }
            for j in 0..start {
                if r.gen::<f64>() < 0.2 {
                    t.push((i, j, r.gen_range(-1.0..1.0)));
                }
            }
        }
        start += s;
    }
    // hide the structure behind a symmetric shuffle
    let a0 = CsrMatrix::from_triplets(n, n, &t).unwrap();
    let p = nodesolve::Permutation::new((0..n).map(|i| (i * 7) % n).collect()).unwrap();
    let a = a0.permute(&p, &p).unwrap();

    let lu = factor(&a, &SolverOptions::default());
    let mut got: Vec<usize> = (0..lu.num_blocks()).map(|k| lu.block_range(k).len()).collect();
    got.sort_unstable();
    assert_eq!(got, vec![8, 10, 12]);
    let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
    let x = lu.solve_vec(&b).unwrap();
    assert!(rel_diff(&x, &dense_solve(&to_dense(&a), &b).unwrap()) <= 1e-10);

    // coupling holds exactly the entries below the block diagonal
    let dense_coupling: usize = {
        let pb = a.permute(&lu.row_perm, &lu.col_perm).unwrap();
        let blk = |i: usize| (0..lu.num_blocks()).find(|&k| lu.block_range(k).contains(&i)).unwrap();
        (0..n).map(|i| pb.row(i).0.iter().filter(|&&j| blk(j) != blk(i)).count()).sum()
    };
    assert_eq!(lu.coupling.nnz(), dense_coupling);
}

#[test]
fn multiple_right_hand_sides() {
    let a = random_nonsingular(15, 0.3, 3);
    let lu = factor(&a, &SolverOptions::default());
    let cols: Vec<Vec<f64>> = (0..3).map(|j| (0..15).map(|i| (i * j) as f64 - 3.0).collect()).collect();
    let x = lu.solve(&DenseMultiVector::from_columns(&cols).unwrap()).unwrap();
    for (j, c) in cols.iter().enumerate() {
        assert_eq!(x.col(j), lu.solve_vec(c).unwrap().as_slice());
    }
}

#[test]
fn pivot_audit_and_threshold() {
    // the diagonal is small but nonzero: tau decides whether it is kept
    let a = CsrMatrix::from_dense(&nodesolve::DenseMatrix::from_rows(&[
        vec![1e-4, 1.0, 0.0],
        vec![1.0, 1.0, 1.0],
        vec![0.0, 1.0, 2.0],
    ]));
    let keep = factor(
        &a,
        &SolverOptions {
            pivot_tol: 1e-5,
            ..Default::default()
        },
    );
    assert_eq!(keep.blocks[0].pivot_rows[0], 0);
    let swap = factor(&a, &SolverOptions::default());
    assert_eq!(swap.blocks[0].pivot_rows[0], 1);
    assert!(keep.pivot_violations(1e-5).is_empty());
    assert!(swap.pivot_violations(1e-3).is_empty());
}

#[test]
fn singular_block_is_reported() {
    let a = CsrMatrix::from_dense(&nodesolve::DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]));
    let plan = symbolic_analyze(&a, &SolverOptions::default()).unwrap();
    assert_eq!(
        numeric_factorize(&plan, &a),
        Err(Error::SingularBlock { block: 0, column: 1 })
    );
    let plan = symbolic_analyze(
        &a,
        &SolverOptions {
            perturb_zero_pivots: true,
            ..Default::default()
        },
    )
    .unwrap();
    let lu = numeric_factorize(&plan, &a).unwrap();
    assert_eq!(lu.perturbed_pivots.len(), 1);
    assert_eq!(lu.perturbed_pivots[0].column, 1);
    assert_eq!(lu.blocks[0].u_diag(1), f64::EPSILON * 2.0);
}

#[test]
fn pattern_mismatch_is_rejected() {
    let a = CsrMatrix::identity(3);
    let plan = symbolic_analyze(&a, &SolverOptions::default()).unwrap();
    let other = random_nonsingular(3, 1.0, 1);
    assert_eq!(numeric_factorize(&plan, &other), Err(Error::PatternMismatch));
}

#[test]
fn structurally_singular_pattern_fails_analysis() {
    let a = CsrMatrix::from_triplets(3, 3, &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)]).unwrap();
    assert!(matches!(
        symbolic_analyze(&a, &SolverOptions::default()),
        Err(Error::StructurallySingular { .. })
    ));
}

fn grid2d(nx: usize, seed: u64) -> CsrMatrix {
    let mut r = rng(seed);
    let n = nx * nx;
    let mut t = Vec::new();
    for y in 0..nx {
        for x in 0..nx {
            let i = y * nx + x;
            t.push((i, i, 4.0 + r.gen::<f64>()));
            if x > 0 {
                t.push((i, i - 1, -1.0 + 0.5 * r.gen::<f64>()));
            }
            if x + 1 < nx {
                t.push((i, i + 1, -1.0 + 0.5 * r.gen::<f64>()));
            }
            if y > 0 {
                t.push((i, i - nx, -1.0 + 0.5 * r.gen::<f64>()));
            }
            if y + 1 < nx {
                t.push((i, i + nx, -1.0 + 0.5 * r.gen::<f64>()));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

#[test]
fn dissected_block_matches_oracle() {
    let a = grid2d(12, 5);
    for leaves in [1, 2, 4, 8] {
        let opts = SolverOptions {
            nd_leaves: leaves,
            nd_threshold: 16,
            ..Default::default()
        };
        let plan = symbolic_analyze(&a, &opts).unwrap();
        assert_eq!(plan.num_blocks(), 1);
        assert_eq!(plan.blocks[0].nd.is_some(), leaves > 1);
        let lu = numeric_factorize(&plan, &a).unwrap();
        assert!(block_residuals_ok(&a, &lu));
        let b: Vec<f64> = (0..a.nrows()).map(|i| (i as f64 * 0.3).cos()).collect();
        let x = lu.solve_vec(&b).unwrap();
        assert!(rel_diff(&x, &dense_solve(&to_dense(&a), &b).unwrap()) <= 1e-10);
    }
}

#[test]
fn parallel_factorization_is_bitwise_sequential() {
    let a = grid2d(14, 9);
    let seq = SolverOptions {
        nd_threshold: 16,
        nd_leaves: 8,
        ..Default::default()
    };
    let par = SolverOptions {
        execution: Execution::Parallel,
        ..seq.clone()
    };
    assert_eq!(factor(&a, &seq), factor(&a, &par));

    let c = random_nonsingular(40, 0.05, 4);
    assert_eq!(
        factor(&c, &SolverOptions::default()),
        factor(
            &c,
            &SolverOptions {
                execution: Execution::Parallel,
                ..Default::default()
            }
        )
    );
}

#[test]
fn reallocation_restarts_block_with_same_result() {
    let a = grid2d(10, 2);
    let opts = SolverOptions {
        nd_threshold: 16,
        ..Default::default()
    };
    let mut plan = symbolic_analyze(&a, &opts).unwrap();
    let reference = numeric_factorize(&plan, &a).unwrap();
    assert_eq!(reference.reallocations(), 0);
    plan.scale_allocation(0.05);
    let grown = numeric_factorize(&plan, &a).unwrap();
    assert!(grown.reallocations() > 0);
    assert_eq!(grown.blocks[0].l, reference.blocks[0].l);
    assert_eq!(grown.blocks[0].u, reference.blocks[0].u);
}

#[test]
fn plan_reuse_matches_fresh_factorizations() {
    let base = random_nonsingular(25, 0.2, 11);
    let plan = symbolic_analyze(&base, &SolverOptions::default()).unwrap();
    let mut r = rng(12);
    for _ in 0..10 {
        let vals: Vec<f64> = base.values().iter().map(|v| v * r.gen_range(0.5..1.5)).collect();
        let a = base.with_values(vals).unwrap();
        let reused = numeric_factorize(&plan, &a).unwrap();
        assert_eq!(reused, factor(&a, &SolverOptions::default()));
    }
}

#[test]
fn weight_matching_prefers_large_entries() {
    // strong anti-diagonal inside an irreducible block
    let a = CsrMatrix::from_dense(&nodesolve::DenseMatrix::from_rows(&[
        vec![1.0, 10.0, 0.5],
        vec![10.0, 1.0, 0.5],
        vec![0.5, 0.5, 10.0],
    ]));
    for scope in [
        nodesolve::lu::WeightMatchingScope::Global,
        nodesolve::lu::WeightMatchingScope::PerBlock,
    ] {
        let lu = factor(
            &a,
            &SolverOptions {
                use_weight_matching: true,
                weight_matching_scope: scope,
                pivot_tol: 1.0,
                ..Default::default()
            },
        );
        let x = lu.solve_vec(&[1.0, 2.0, 3.0]).unwrap();
        assert!(rel_diff(&x, &dense_solve(&to_dense(&a), &[1.0, 2.0, 3.0]).unwrap()) < 1e-12);
    }
}

#[test]
fn block_census_examples() {
    let n = 100;
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 4.0));
        if i > 0 {
            t.push((0, i, 1.0));
            t.push((i, 0, 1.0));
        }
    }
    let arrow = CsrMatrix::from_triplets(n, n, &t).unwrap();
    let plan = symbolic_analyze(&arrow, &SolverOptions::default()).unwrap();
    assert_eq!(plan.num_blocks(), 1);

    let mut t = Vec::new();
    for blk in 0..2 {
        for i in 0..5 {
            for j in 0..5 {
                t.push((blk * 5 + i, blk * 5 + j, if i == j { 6.0 } else { 1.0 }));
            }
        }
    }
    let two = CsrMatrix::from_triplets(10, 10, &t).unwrap();
    let plan = symbolic_analyze(&two, &SolverOptions::default()).unwrap();
    assert_eq!(plan.btf.block_sizes(), vec![5, 5]);
}

#[test]
fn refinement_edge_cases() {
    let a = random_nonsingular(10, 0.4, 21);
    let lu = factor(&a, &SolverOptions::default());
    let b: Vec<f64> = (0..10).map(|i| i as f64).collect();
    let r = iterative_refinement(&a, &lu, &b, 5, 1e-6).unwrap();
    assert_eq!(r.steps, 0);
    let z = iterative_refinement(&a, &lu, &[0.0; 10], 5, 1e-12).unwrap();
    assert_eq!((z.steps, z.x), (0, vec![0.0; 10]));
}

#[test]
fn refinement_recovers_from_perturbed_pivot() {
    // the first dissection leaf is a signless path Laplacian (singular on
    // its own); the coupling to the separator makes the matrix nonsingular
    let n = 10;
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        d[i][i] = [1.0, 2.0, 2.0, 1.0].get(i).copied().unwrap_or(4.0);
        if i + 1 < n {
            let o = if i < 3 { 1.0 } else { -1.0 };
            d[i][i + 1] = o;
            d[i + 1][i] = o;
        }
    }
    let a = from_dense(&d);
    let opts = SolverOptions {
        nd_threshold: 4,
        nd_leaves: 2,
        perturb_zero_pivots: true,
        ..Default::default()
    };
    let plan = symbolic_analyze(&a, &opts).unwrap();
    let lu = numeric_factorize(&plan, &a).unwrap();
    assert!(!lu.perturbed_pivots.is_empty(), "domain layout no longer isolates the singular corner");
    let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
    let r = iterative_refinement(&a, &lu, &b, 5, 1e-12).unwrap();
    assert!(r.final_residual <= 1e-12, "{:?}", r.residuals);
    assert!(r.residuals.windows(2).all(|w| w[1] <= w[0]), "{:?}", r.residuals);
}

#[test]
fn threshold_pivoting_growth_exceeds_fixed_slack() {
    // diagonal pivots 0.114 (column max 1.004) and 0.054 (column max 10.9)
    // both pass tau = 1e-3, and U grows to ~1.8e5
    let a = random_nonsingular(10, 0.14460812891990982, 8133813769882906168);
    let opts = SolverOptions { perturb_zero_pivots: true, ..SolverOptions::default() };
    let lu = factor(&a, &opts);
    assert!(lu.perturbed_pivots.is_empty());
    assert!(lu.pivot_violations(opts.pivot_tol).is_empty());
    assert!(growth_factor(&a, &lu) > 1e4);
    assert!(!block_residuals_ok(&a, &lu));
    assert!(block_backward_errors_ok(&a, &lu));
    let b: Vec<f64> = (0..10).map(|i| i as f64 - 4.5).collect();
    let x = lu.solve_vec(&b).unwrap();
    let r: Vec<f64> = a.spmv(&x).unwrap().iter().zip(&b).map(|(p, q)| p - q).collect();
    assert!(norm2(&r) <= 1e-10 * norm2(&b));
}
