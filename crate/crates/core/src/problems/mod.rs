//! Seeded test problems: 3D stencil operators and circuit-like matrices with
//! a planted block triangular structure.
//!
//! Every problem comes with `b = A x_true` for a uniform random `x_true` in
//! `[-1, 1]`, so generation is a pure function of the [`ProblemSpec`].

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, Permutation};

/// Stiffness of an elasticity spring along unit direction `e` is
/// `(ELASTIC_C1 I + ELASTIC_C2 e e^T) / |d|^2`.
pub const ELASTIC_C1: f64 = 1.0;
pub const ELASTIC_C2: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Laplace3d7pt,
    Stencil3d27pt,
    Elasticity3d27ptVector,
    CircuitLike,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Laplace3d7pt => "laplace3d_7pt",
            ProblemKind::Stencil3d27pt => "stencil3d_27pt",
            ProblemKind::Elasticity3d27ptVector => "elasticity3d_27pt_vector",
            ProblemKind::CircuitLike => "circuit_like",
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ProblemKind::Laplace3d7pt,
            ProblemKind::Stencil3d27pt,
            ProblemKind::Elasticity3d27ptVector,
            ProblemKind::CircuitLike,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::InvalidOption(format!("unknown problem kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    /// Grid points per axis for stencils, matrix dimension for circuits.
    pub n: usize,
    pub seed: u64,
    pub dofs_per_node: usize,
    /// Number of 1x1 blocks planted beside the large block of a circuit.
    pub small_blocks: usize,
}

impl ProblemSpec {
    pub fn laplace3d(n: usize, seed: u64) -> Self {
        Self { kind: ProblemKind::Laplace3d7pt, n, seed, dofs_per_node: 1, small_blocks: 0 }
    }

    pub fn stencil27(n: usize, seed: u64) -> Self {
        Self { kind: ProblemKind::Stencil3d27pt, n, seed, dofs_per_node: 1, small_blocks: 0 }
    }

    pub fn elasticity(n: usize, seed: u64) -> Self {
        Self { kind: ProblemKind::Elasticity3d27ptVector, n, seed, dofs_per_node: 3, small_blocks: 0 }
    }

    pub fn circuit(size: usize, small_blocks: usize, seed: u64) -> Self {
        Self { kind: ProblemKind::CircuitLike, n: size, seed, dofs_per_node: 1, small_blocks }
    }

    /// Spec with the usual defaults for `kind`: 3 DoFs per node for
    /// elasticity, and about a tenth of the rows as small circuit blocks.
    pub fn with_defaults(kind: ProblemKind, n: usize, seed: u64) -> Self {
        match kind {
            ProblemKind::Laplace3d7pt => Self::laplace3d(n, seed),
            ProblemKind::Stencil3d27pt => Self::stencil27(n, seed),
            ProblemKind::Elasticity3d27ptVector => Self::elasticity(n, seed),
            ProblemKind::CircuitLike => Self::circuit(n, n / 10, seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidOption("problem size must be positive".into()));
        }
        let dofs = if self.kind == ProblemKind::Elasticity3d27ptVector { 3 } else { 1 };
        if self.dofs_per_node != dofs {
            return Err(Error::InvalidOption(format!(
                "{} needs dofs_per_node = {dofs}, got {}",
                self.kind.name(),
                self.dofs_per_node
            )));
        }
        if self.kind == ProblemKind::CircuitLike {
            if self.small_blocks >= self.n {
                return Err(Error::InvalidOption(format!(
                    "circuit of size {} cannot hold {} small blocks beside a large one",
                    self.n, self.small_blocks
                )));
            }
        } else {
            if self.small_blocks != 0 {
                return Err(Error::InvalidOption("small_blocks applies to circuit_like only".into()));
            }
            if self.n.checked_pow(3).and_then(|v| v.checked_mul(self.dofs_per_node)).is_none() {
                return Err(Error::InvalidOption("grid too large".into()));
            }
        }
        Ok(())
    }

    /// Number of rows of the generated matrix.
    pub fn rows(&self) -> usize {
        match self.kind {
            ProblemKind::CircuitLike => self.n,
            _ => self.n.pow(3) * self.dofs_per_node,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    pub x_true: Vec<f64>,
}

pub fn generate(spec: &ProblemSpec) -> Result<Problem> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let a = match spec.kind {
        ProblemKind::Laplace3d7pt => scalar_stencil(spec.n, 1)?,
        ProblemKind::Stencil3d27pt => scalar_stencil(spec.n, 3)?,
        ProblemKind::Elasticity3d27ptVector => elasticity(spec.n)?,
        ProblemKind::CircuitLike => circuit(spec.n, spec.small_blocks, &mut rng)?,
    };
    let x_true: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let b = a.spmv(&x_true)?;
    Ok(Problem { spec: *spec, a, b, x_true })
}

fn offsets(max_manhattan: i64) -> Vec<(i64, i64, i64)> {
    let mut out = Vec::new();
    for dz in -1..=1i64 {
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                let m = dx.abs() + dy.abs() + dz.abs();
                if m > 0 && m <= max_manhattan {
                    out.push((dx, dy, dz));
                }
            }
        }
    }
    out
}

fn neighbor(n: usize, node: usize, d: (i64, i64, i64)) -> Option<usize> {
    let n_i = n as i64;
    let (x, y, z) = ((node % n) as i64, ((node / n) % n) as i64, (node / (n * n)) as i64);
    let (a, b, c) = (x + d.0, y + d.1, z + d.2);
    let inside = |v: i64| (0..n_i).contains(&v);
    (inside(a) && inside(b) && inside(c)).then(|| (a + n_i * (b + n_i * c)) as usize)
}

/// Graph Laplacian of the grid with Dirichlet boundary: diagonal equals the
/// full stencil size, one `-1` per neighbor inside the grid.
fn scalar_stencil(n: usize, reach: i64) -> Result<CsrMatrix> {
    let dirs = offsets(reach);
    let nodes = n.pow(3);
    let mut t = Vec::with_capacity(nodes * (dirs.len() + 1));
    for p in 0..nodes {
        t.push((p, p, dirs.len() as f64));
        for &d in &dirs {
            if let Some(q) = neighbor(n, p, d) {
                t.push((p, q, -1.0));
            }
        }
    }
    CsrMatrix::from_triplets(nodes, nodes, &t)
}

/// Springs between every pair of 27-point neighbors, each node carrying
/// three displacement components. Springs leaving the grid are tied to a
/// fixed node, which keeps the operator positive definite.
fn elasticity(n: usize) -> Result<CsrMatrix> {
    let dirs = offsets(3);
    let nodes = n.pow(3);
    let mut t = Vec::with_capacity(nodes * 9 * (dirs.len() + 1));
    for p in 0..nodes {
        let mut diag = [[0.0; 3]; 3];
        for &d in &dirs {
            let v = [d.0 as f64, d.1 as f64, d.2 as f64];
            let len2: f64 = v.iter().map(|c| c * c).sum();
            let mut k = [[0.0; 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    let identity = if r == c { ELASTIC_C1 } else { 0.0 };
                    k[r][c] = (identity + ELASTIC_C2 * v[r] * v[c] / len2) / len2;
                    diag[r][c] += k[r][c];
                }
            }
            if let Some(q) = neighbor(n, p, d) {
                for (r, row) in k.iter().enumerate() {
                    for (c, &val) in row.iter().enumerate() {
                        t.push((3 * p + r, 3 * q + c, -val));
                    }
                }
            }
        }
        for (r, row) in diag.iter().enumerate() {
            for (c, &val) in row.iter().enumerate() {
                t.push((3 * p + r, 3 * p + c, val));
            }
        }
    }
    CsrMatrix::from_triplets(3 * nodes, 3 * nodes, &t)
}

/// One large irreducible block plus `small` 1x1 blocks, coupled block lower
/// triangularly, then hidden behind independent random row and column
/// permutations. A few coupling entries are stored as explicit zeros.
fn circuit(size: usize, small: usize, rng: &mut ChaCha8Rng) -> Result<CsrMatrix> {
    let large = size - small;
    let before = small / 2;
    // planted block ranges in order
    let mut blocks: Vec<std::ops::Range<usize>> = (0..before).map(|i| i..i + 1).collect();
    blocks.push(before..before + large);
    blocks.extend((before + large..size).map(|i| i..i + 1));

    let mut t: Vec<(usize, usize, f64)> = Vec::new();
    let mut off_sum = vec![0.0f64; size];
    let lo = before;
    if large > 1 {
        for i in 0..large {
            let r = lo + i;
            let mut cols = vec![lo + (i + 1) % large];
            for _ in 0..2 {
                cols.push(lo + rng.gen_range(0..large));
            }
            cols.sort_unstable();
            cols.dedup();
            for c in cols.into_iter().filter(|&c| c != r) {
                let v: f64 = rng.gen_range(-1.0..1.0);
                let v = if v.abs() < 0.1 { v.signum() * 0.1 + v } else { v };
                off_sum[r] += v.abs();
                t.push((r, c, v));
            }
        }
    }
    for (bi, blk) in blocks.iter().enumerate().skip(1) {
        let earlier = blocks[bi - 1].end;
        for r in blk.clone() {
            let links = if blk.len() == 1 { 2 } else { usize::from(rng.gen_bool(0.3)) };
            for _ in 0..links {
                let c = rng.gen_range(0..earlier);
                let v = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(-1.0..1.0) };
                off_sum[r] += f64::abs(v);
                t.push((r, c, v));
            }
        }
    }
    for (r, s) in off_sum.iter().enumerate() {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        t.push((r, r, sign * (s + rng.gen_range(0.5..1.5))));
    }
    let planted = CsrMatrix::from_triplets(size, size, &t)?;

    let mut rp: Vec<usize> = (0..size).collect();
    let mut cp: Vec<usize> = (0..size).collect();
    rp.shuffle(rng);
    cp.shuffle(rng);
    planted.permute(&Permutation::new(rp)?, &Permutation::new(cp)?)
}
