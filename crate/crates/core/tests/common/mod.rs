//! Independent dense oracles shared by the integration tests.
#![allow(dead_code)]

use nodesolve::lu::{BlockFactors, LuFactors};
use nodesolve::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_dense(a: &CsrMatrix) -> Dense {
    let mut d = vec![vec![0.0; a.ncols()]; a.nrows()];
    for (i, row) in d.iter_mut().enumerate() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            row[j] += v;
        }
    }
    d
}

pub fn from_dense(d: &Dense) -> CsrMatrix {
    let mut t = Vec::new();
    for (i, row) in d.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                t.push((i, j, v));
            }
        }
    }
    CsrMatrix::from_triplets(d.len(), d.first().map_or(0, Vec::len), &t).unwrap()
}

pub fn matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for p in 0..k {
            let aip = a[i][p];
            if aip != 0.0 {
                for j in 0..m {
                    c[i][j] += aip * b[p][j];
                }
            }
        }
    }
    c
}

pub fn fro(a: &Dense) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn fro_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y) * (x - y)))
        .sum::<f64>()
        .sqrt()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    norm2(&d) / norm2(y).max(f64::MIN_POSITIVE)
}

/// Gaussian elimination with partial pivoting; `None` if singular.
pub fn dense_solve(a: &Dense, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut m: Dense = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))?;
        if m[p][k] == 0.0 {
            return None;
        }
        m.swap(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    Some(x)
}

pub fn dense_inverse(a: &Dense) -> Option<Dense> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(dense_solve(a, &e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

/// Forward substitution for a lower triangular dense matrix.
pub fn lower_solve(l: &Dense, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in 0..l.len() {
        let s: f64 = (0..i).map(|j| l[i][j] * x[j]).sum();
        x[i] = (x[i] - s) / l[i][i];
    }
    x
}

pub fn upper_solve(u: &Dense, b: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| u[i][j] * x[j]).sum();
        x[i] = (x[i] - s) / u[i][i];
    }
    x
}

/// Random sparse matrix with a nonzero diagonal of given dominance weight.
pub fn random_sparse(n: usize, density: f64, diag: f64, seed: u64) -> CsrMatrix {
    let mut r = rng(seed);
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                t.push((i, j, diag * (1.0 + r.gen::<f64>())));
            } else if r.gen::<f64>() < density {
                t.push((i, j, r.gen_range(-1.0..1.0)));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

/// Random matrix with a random structurally nonsingular pattern: a random
/// permutation of entries plus noise, rows not necessarily dominant.
pub fn random_nonsingular(n: usize, density: f64, seed: u64) -> CsrMatrix {
    use rand::seq::SliceRandom;
    let mut r = rng(seed);
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut r);
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, p[i], r.gen_range(1.0..2.0) * if r.gen() { 1.0 } else { -1.0 }));
        for j in 0..n {
            if j != p[i] && r.gen::<f64>() < density {
                t.push((i, j, r.gen_range(-1.0..1.0)));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

/// Strongly connected components by reachability closure; returns the
/// sorted multiset of component sizes.
pub fn brute_force_scc_sizes(adj: &[Vec<bool>]) -> Vec<usize> {
    let n = adj.len();
    let mut reach = adj.to_vec();
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let mut s = 0;
        for j in 0..n {
            if reach[i][j] && reach[j][i] {
                seen[j] = true;
                s += 1;
            }
        }
        sizes.push(s);
    }
    sizes.sort_unstable();
    sizes
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        heap(k - 1, a, out);
        for i in 0..k - 1 {
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, out);
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

/// Random lower triangular matrix with a random contiguous block partition.
/// Diagonal blocks are dense-ish and well conditioned; off-diagonal blocks
/// are sparse.
pub fn random_block_lower(n: usize, max_block: usize, density: f64, seed: u64) -> (CsrMatrix, Vec<usize>) {
    let mut r = rng(seed);
    let mut offsets = vec![0];
    while *offsets.last().unwrap() < n {
        let s = r.gen_range(1..=max_block).min(n - offsets.last().unwrap());
        offsets.push(offsets.last().unwrap() + s);
    }
    let mut block_start = vec![0; n];
    for w in offsets.windows(2) {
        for i in w[0]..w[1] {
            block_start[i] = w[0];
        }
    }
    let mut t = Vec::new();
    for i in 0..n {
        let bs = block_start[i];
        for j in 0..i {
            let inside = j >= bs;
            let p = if inside { 0.6 } else { density };
            if r.gen::<f64>() < p {
                let scale = if inside { 0.5 / (i - bs) as f64 } else { 1.0 };
                t.push((i, j, scale * r.gen_range(-1.0..1.0)));
            }
        }
        let sign = if r.gen::<bool>() { 1.0 } else { -1.0 };
        t.push((i, i, sign * r.gen_range(1.0..2.0)));
    }
    (CsrMatrix::from_triplets(n, n, &t).unwrap(), offsets)
}

pub fn dense_condition_one(a: &Dense) -> f64 {
    let norm = |m: &Dense| {
        (0..m.len())
            .map(|j| m.iter().map(|r| r[j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    dense_inverse(a).map_or(f64::INFINITY, |inv| norm(a) * norm(&inv))
}

pub fn sub_block(a: &Dense, r: std::ops::Range<usize>) -> Dense {
    a[r.clone()].iter().map(|row| row[r.clone()].to_vec()).collect()
}

/// Fill levels by dense KIJ symbolic elimination; `None` marks dropped
/// entries.
pub fn dense_fill_levels(a: &CsrMatrix, k: usize) -> Vec<Vec<Option<usize>>> {
    let n = a.nrows();
    let mut lev = vec![vec![None; n]; n];
    for i in 0..n {
        for &j in a.row(i).0 {
            lev[i][j] = Some(0);
        }
    }
    for t in 0..n {
        for i in t + 1..n {
            let Some(lit) = lev[i][t] else { continue };
            for j in t + 1..n {
                let Some(ltj) = lev[t][j] else { continue };
                let cand = lit + ltj + 1;
                if cand <= k && lev[i][j].map_or(true, |l| cand < l) {
                    lev[i][j] = Some(cand);
                }
            }
        }
    }
    lev
}

/// Dense Gaussian elimination with updates outside `mask` dropped. Returns
/// the combined factor: `L` strictly below the diagonal, `U` on and above.
pub fn dense_masked_ilu(a: &Dense, mask: &[Vec<bool>]) -> Dense {
    let n = a.len();
    let mut m = a.clone();
    for t in 0..n {
        for i in t + 1..n {
            if !mask[i][t] {
                continue;
            }
            m[i][t] /= m[t][t];
            for j in t + 1..n {
                if mask[t][j] && mask[i][j] {
                    m[i][j] -= m[i][t] * m[t][j];
                }
            }
        }
    }
    m
}

/// 3D 7-point Laplacian on an `nx * ny * nz` grid, Dirichlet boundary.
pub fn laplace7(nx: usize, ny: usize, nz: usize) -> CsrMatrix {
    let idx = |x: usize, y: usize, z: usize| x + nx * (y + ny * z);
    let mut t = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let p = idx(x, y, z);
                t.push((p, p, 6.0));
                if x > 0 { t.push((p, idx(x - 1, y, z), -1.0)); }
                if x + 1 < nx { t.push((p, idx(x + 1, y, z), -1.0)); }
                if y > 0 { t.push((p, idx(x, y - 1, z), -1.0)); }
                if y + 1 < ny { t.push((p, idx(x, y + 1, z), -1.0)); }
                if z > 0 { t.push((p, idx(x, y, z - 1), -1.0)); }
                if z + 1 < nz { t.push((p, idx(x, y, z + 1), -1.0)); }
            }
        }
    }
    let n = nx * ny * nz;
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

pub fn tridiagonal(n: usize, lo: f64, d: f64, up: f64) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, d));
        if i > 0 {
            t.push((i, i - 1, lo));
        }
        if i + 1 < n {
            t.push((i, i + 1, up));
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(a: &Dense) -> Vec<f64> {
    let n = a.len();
    let mut m = a.clone();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Dense `P B_kk` for block `k` of the permuted matrix.
pub fn permuted_block(a: &CsrMatrix, lu: &LuFactors, k: usize) -> Dense {
    let b = a.permute(&lu.row_perm, &lu.col_perm).unwrap();
    let sub = to_dense(&b.principal_submatrix(lu.block_range(k)));
    lu.blocks[k].pivot_rows.iter().map(|&r| sub[r].clone()).collect()
}

pub fn lu_product(f: &BlockFactors) -> Dense {
    let l = to_dense(&f.l_with_unit_diagonal());
    let u = to_dense(&f.u_csr());
    matmul(&l, &u)
}

pub fn block_residuals_ok(a: &CsrMatrix, lu: &LuFactors) -> bool {
    (0..lu.num_blocks()).all(|k| {
        let pb = permuted_block(a, lu, k);
        let m = pb.len() as f64;
        fro_diff(&pb, &lu_product(&lu.blocks[k])) <= 1e3 * f64::EPSILON * m * fro(&pb)
    })
}

/// `|L| |U|` of one block.
pub fn abs_lu_product(f: &BlockFactors) -> Dense {
    let abs = |d: Dense| -> Dense { d.into_iter().map(|r| r.into_iter().map(f64::abs).collect()).collect() };
    let l = abs(to_dense(&f.l_with_unit_diagonal()));
    let u = abs(to_dense(&f.u_csr()));
    matmul(&l, &u)
}

/// Backward error bound scaled by `|| |L| |U| ||` instead of `||A||`, so it
/// holds whatever the element growth.
pub fn block_backward_errors_ok(a: &CsrMatrix, lu: &LuFactors) -> bool {
    (0..lu.num_blocks()).all(|k| {
        let pb = permuted_block(a, lu, k);
        let m = pb.len() as f64;
        let f = &lu.blocks[k];
        fro_diff(&pb, &lu_product(f)) <= 1e3 * f64::EPSILON * m * fro(&abs_lu_product(f))
    })
}

/// `max_k || |L_k| |U_k| ||_F / ||A_kk||_F`.
pub fn growth_factor(a: &CsrMatrix, lu: &LuFactors) -> f64 {
    (0..lu.num_blocks())
        .map(|k| fro(&abs_lu_product(&lu.blocks[k])) / fro(&permuted_block(a, lu, k)))
        .fold(0.0, f64::max)
}
