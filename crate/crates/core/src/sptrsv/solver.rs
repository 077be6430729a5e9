use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::schedule::{build_level_schedule, LevelSchedule};
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, DenseMatrix, DenseMultiVector};
use crate::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrsvVariant {
    /// Block substitution followed by the off-diagonal update.
    #[default]
    V1,
    /// Explicit inverses of the diagonal blocks.
    V2,
    /// Inverses folded into the off-diagonal panels: one product per block.
    V3,
    /// Partitioned inverse: one sparse product per level.
    V4,
}

impl TrsvVariant {
    pub const ALL: [TrsvVariant; 4] = [Self::V1, Self::V2, Self::V3, Self::V4];

    pub fn from_number(v: u8) -> Option<Self> {
        match v {
            1 => Some(Self::V1),
            2 => Some(Self::V2),
            3 => Some(Self::V3),
            4 => Some(Self::V4),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::V1 => 1,
            Self::V2 => 2,
            Self::V3 => 3,
            Self::V4 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Triangle {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrsvOptions {
    /// Levels with more blocks than this run as one batched kernel.
    pub batch_threshold: usize,
    pub execution: Execution,
}

impl Default for TrsvOptions {
    fn default() -> Self {
        Self {
            batch_threshold: 8,
            execution: Execution::Sequential,
        }
    }
}

/// `-L[rows, block] * D^-1`, the part of a level factor below its diagonal block.
#[derive(Debug, Clone, PartialEq)]
struct Panel {
    rows: Vec<usize>,
    w: DenseMatrix,
}

/// Sparse rows of one level factor `L_l^-1`; rows not listed are identity.
#[derive(Debug, Clone, PartialEq)]
struct LevelOperator {
    rows: Vec<usize>,
    op: CsrMatrix,
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    Substitution,
    Inverse(Vec<DenseMatrix>),
    Merged(Vec<DenseMatrix>, Vec<Panel>),
    Partitioned(Vec<LevelOperator>),
}

/// Level-scheduled triangular solver over a contiguous block partition.
///
/// Upper triangular systems are stored reversed (`i -> n-1-i`), which turns
/// them into lower triangular ones with the same block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct TriSolver {
    variant: TrsvVariant,
    triangle: Triangle,
    l: CsrMatrix,
    offsets: Vec<usize>,
    schedule: LevelSchedule,
    payload: Payload,
    options: TrsvOptions,
    setup_flops: u64,
}

fn reverse(t: &CsrMatrix) -> CsrMatrix {
    let n = t.nrows();
    let mut trip = Vec::with_capacity(t.nnz());
    for i in 0..n {
        let (cols, vals) = t.row(i);
        trip.extend(cols.iter().zip(vals).map(|(&j, &v)| (n - 1 - i, n - 1 - j, v)));
    }
    CsrMatrix::from_triplets(n, n, &trip).expect("indices stay in bounds")
}

impl TriSolver {
    pub fn new(
        t: &CsrMatrix,
        triangle: Triangle,
        offsets: &[usize],
        variant: TrsvVariant,
        options: TrsvOptions,
    ) -> Result<Self> {
        let n = t.require_square()?;
        let (l, offsets) = match triangle {
            Triangle::Lower => {
                if !t.is_lower_triangular() {
                    return Err(Error::NotTriangular("lower"));
                }
                (t.clone(), offsets.to_vec())
            }
            Triangle::Upper => {
                if !t.is_upper_triangular() {
                    return Err(Error::NotTriangular("upper"));
                }
                let rev: Vec<usize> = offsets.iter().rev().map(|&o| n.saturating_sub(o)).collect();
                (reverse(t), rev)
            }
        };
        let schedule = build_level_schedule(&l, &offsets)?;
        for i in 0..n {
            let (cols, vals) = l.row(i);
            if cols.last() != Some(&i) || vals[vals.len() - 1] == 0.0 {
                let row = match triangle {
                    Triangle::Lower => i,
                    Triangle::Upper => n - 1 - i,
                };
                return Err(Error::ZeroDiagonal { row });
            }
        }
        let mut s = Self {
            variant,
            triangle,
            l,
            offsets,
            schedule,
            payload: Payload::Substitution,
            options,
            setup_flops: 0,
        };
        s.build_payload()?;
        Ok(s)
    }

    /// Solver with every row its own block.
    pub fn pointwise(t: &CsrMatrix, triangle: Triangle, variant: TrsvVariant, options: TrsvOptions) -> Result<Self> {
        let offsets: Vec<usize> = (0..=t.nrows()).collect();
        Self::new(t, triangle, &offsets, variant, options)
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    pub fn variant(&self) -> TrsvVariant {
        self.variant
    }

    pub fn triangle(&self) -> Triangle {
        self.triangle
    }

    /// Schedule in solve order (for upper systems, blocks are numbered from
    /// the bottom).
    pub fn schedule(&self) -> &LevelSchedule {
        &self.schedule
    }

    pub fn nlevels(&self) -> usize {
        self.schedule.nlevels()
    }

    /// Floating-point operations spent in setup.
    pub fn setup_flops(&self) -> u64 {
        self.setup_flops
    }

    fn batched(&self, level: &[usize]) -> bool {
        level.len() > self.options.batch_threshold
    }

    /// Kernel invocations of one single-vector solve.
    pub fn kernel_launches(&self) -> usize {
        self.schedule
            .levels
            .iter()
            .map(|lev| {
                let per_block = match self.variant {
                    TrsvVariant::V1 | TrsvVariant::V2 => 2,
                    TrsvVariant::V3 => 1,
                    TrsvVariant::V4 => return 1,
                };
                if self.batched(lev) {
                    per_block
                } else {
                    per_block * lev.len()
                }
            })
            .sum()
    }

    fn block(&self, b: usize) -> Range<usize> {
        self.offsets[b]..self.offsets[b + 1]
    }

    fn diagonal_block(&self, b: usize) -> DenseMatrix {
        let r = self.block(b);
        let mut d = DenseMatrix::zeros(r.len(), r.len());
        for i in r.clone() {
            let (cols, vals) = self.l.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j >= r.start {
                    d[(i - r.start, j - r.start)] = v;
                }
            }
        }
        d
    }

    fn inverses(&self) -> Result<(Vec<DenseMatrix>, u64)> {
        let nb = self.offsets.len() - 1;
        let mut out = Vec::with_capacity(nb);
        let mut flops = 0;
        for b in 0..nb {
            let d = self.diagonal_block(b);
            let block = match self.triangle {
                Triangle::Lower => b,
                Triangle::Upper => nb - 1 - b,
            };
            let Some((inv, f)) = d.inverse_with_flops() else {
                return Err(Error::IllConditionedBlock {
                    block,
                    condition: f64::INFINITY,
                });
            };
            let condition = d.norm_one() * inv.norm_one();
            if !(condition <= 1.0 / f64::EPSILON) {
                return Err(Error::IllConditionedBlock { block, condition });
            }
            flops += f;
            out.push(inv);
        }
        Ok((out, flops))
    }

    fn panels(&self, dinv: &[DenseMatrix]) -> (Vec<Panel>, u64) {
        let n = self.n();
        let lt = self.l.to_csc();
        let nb = self.offsets.len() - 1;
        let mut flops = 0u64;
        let mut panels = Vec::with_capacity(nb);
        let mut mark = vec![usize::MAX; n];
        for b in 0..nb {
            let r = self.block(b);
            let bs = r.len();
            let mut rows = Vec::new();
            for j in r.clone() {
                for &i in lt.col(j).0 {
                    if i >= r.end && mark[i] != b {
                        mark[i] = b;
                        rows.push(i);
                    }
                }
            }
            rows.sort_unstable();
            let mut w = DenseMatrix::zeros(rows.len(), bs);
            for (t, &i) in rows.iter().enumerate() {
                let (cols, vals) = self.l.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    if r.contains(&j) {
                        let dr = dinv[b].row(j - r.start);
                        for c in 0..bs {
                            w[(t, c)] -= v * dr[c];
                        }
                        flops += 2 * bs as u64;
                    }
                }
            }
            panels.push(Panel { rows, w });
        }
        (panels, flops)
    }

    fn build_payload(&mut self) -> Result<()> {
        match self.variant {
            TrsvVariant::V1 => {}
            TrsvVariant::V2 => {
                let (dinv, f) = self.inverses()?;
                self.setup_flops = f;
                self.payload = Payload::Inverse(dinv);
            }
            TrsvVariant::V3 | TrsvVariant::V4 => {
                let (dinv, f1) = self.inverses()?;
                let (panels, f2) = self.panels(&dinv);
                self.setup_flops = f1 + f2;
                self.payload = if self.variant == TrsvVariant::V3 {
                    Payload::Merged(dinv, panels)
                } else {
                    Payload::Partitioned(self.level_operators_from(&dinv, &panels, true))
                };
            }
        }
        Ok(())
    }

    fn level_operators_from(&self, dinv: &[DenseMatrix], panels: &[Panel], drop_zeros: bool) -> Vec<LevelOperator> {
        let n = self.n();
        self.schedule
            .levels
            .iter()
            .map(|level| {
                let mut trip: Vec<(usize, usize, f64)> = Vec::new();
                let mut touched: Vec<usize> = Vec::new();
                for &b in level {
                    let r = self.block(b);
                    for i in r.clone() {
                        touched.push(i);
                        for (c, &v) in dinv[b].row(i - r.start).iter().enumerate() {
                            if !(drop_zeros && v == 0.0) {
                                trip.push((i, r.start + c, v));
                            }
                        }
                    }
                    let p = &panels[b];
                    for (t, &i) in p.rows.iter().enumerate() {
                        touched.push(i);
                        trip.push((i, i, 1.0));
                        for (c, &v) in p.w.row(t).iter().enumerate() {
                            if !(drop_zeros && v == 0.0) {
                                trip.push((i, r.start + c, v));
                            }
                        }
                    }
                }
                touched.sort_unstable();
                touched.dedup();
                let mut local = vec![usize::MAX; n];
                for (t, &i) in touched.iter().enumerate() {
                    local[i] = t;
                }
                // identity entries of panel rows are pushed once per block
                trip.sort_by_key(|e| (e.0, e.1));
                trip.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1 && a.0 == a.1);
                let trip: Vec<_> = trip.into_iter().map(|(i, j, v)| (local[i], j, v)).collect();
                LevelOperator {
                    op: CsrMatrix::from_triplets(touched.len(), n, &trip).expect("in-bounds level entries"),
                    rows: touched,
                }
            })
            .collect()
    }

    /// The level factors `L_l^-1` as full `n x n` matrices in application
    /// order, so that `L^-1 = F_last * ... * F_first`. Only the merged and
    /// partitioned variants carry them.
    pub fn level_operators(&self) -> Option<Vec<CsrMatrix>> {
        let ops = match &self.payload {
            Payload::Merged(dinv, panels) => self.level_operators_from(dinv, panels, false),
            Payload::Partitioned(ops) => ops.clone(),
            _ => return None,
        };
        let n = self.n();
        let map = |i: usize| match self.triangle {
            Triangle::Lower => i,
            Triangle::Upper => n - 1 - i,
        };
        Some(
            ops.iter()
                .map(|lo| {
                    let mut is_row = vec![false; n];
                    let mut trip = Vec::new();
                    for (t, &i) in lo.rows.iter().enumerate() {
                        is_row[i] = true;
                        let (cols, vals) = lo.op.row(t);
                        trip.extend(cols.iter().zip(vals).map(|(&j, &v)| (map(i), map(j), v)));
                    }
                    trip.extend((0..n).filter(|&i| !is_row[i]).map(|i| (map(i), map(i), 1.0)));
                    CsrMatrix::from_triplets(n, n, &trip).expect("in-bounds level entries")
                })
                .collect(),
        )
    }

    /// Solves `T x = b` for every column of `b`.
    pub fn solve(&self, b: &DenseMultiVector) -> Result<DenseMultiVector> {
        if b.nrows() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: b.nrows(),
            });
        }
        let mut x = DenseMultiVector::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            x.col_mut(j).copy_from_slice(b.col(j));
            self.solve_in_place(x.col_mut(j))?;
        }
        Ok(x)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        if self.triangle == Triangle::Upper {
            x.reverse();
        }
        for level in &self.schedule.levels {
            let parallel = self.options.execution == Execution::Parallel && self.batched(level);
            match &self.payload {
                Payload::Substitution | Payload::Inverse(_) => self.pull_level(level, x, parallel),
                Payload::Merged(dinv, panels) => self.merged_level(level, dinv, panels, x, parallel),
                Payload::Partitioned(ops) => {
                    let lo = &ops[self.schedule.level_of[level[0]]];
                    let y: Vec<f64> = if parallel {
                        (0..lo.rows.len()).into_par_iter().map(|t| row_dot(&lo.op, t, x)).collect()
                    } else {
                        (0..lo.rows.len()).map(|t| row_dot(&lo.op, t, x)).collect()
                    };
                    for (&i, v) in lo.rows.iter().zip(y) {
                        x[i] = v;
                    }
                }
            }
        }
        if self.triangle == Triangle::Upper {
            x.reverse();
        }
        Ok(())
    }

    /// Gathers the off-diagonal contributions of earlier levels, then solves
    /// the diagonal block (by substitution or with its inverse).
    fn pull_block(&self, b: usize, x: &[f64]) -> Vec<f64> {
        let r = self.block(b);
        let mut seg: Vec<f64> = x[r.clone()].to_vec();
        for (t, i) in r.clone().enumerate() {
            let (cols, vals) = self.l.row(i);
            let mut s = seg[t];
            for (&j, &v) in cols.iter().zip(vals) {
                if j >= r.start {
                    break;
                }
                s -= v * x[j];
            }
            seg[t] = s;
        }
        match &self.payload {
            Payload::Inverse(dinv) => dinv[b].matvec(&seg),
            _ => {
                for (t, i) in r.clone().enumerate() {
                    let (cols, vals) = self.l.row(i);
                    let mut s = seg[t];
                    let mut diag = 1.0;
                    for (&j, &v) in cols.iter().zip(vals) {
                        if j < r.start {
                            continue;
                        }
                        if j == i {
                            diag = v;
                            break;
                        }
                        s -= v * seg[j - r.start];
                    }
                    seg[t] = s / diag;
                }
                seg
            }
        }
    }

    fn pull_level(&self, level: &[usize], x: &mut [f64], parallel: bool) {
        if parallel {
            let segs: Vec<Vec<f64>> = level.par_iter().map(|&b| self.pull_block(b, x)).collect();
            for (&b, seg) in level.iter().zip(segs) {
                x[self.block(b)].copy_from_slice(&seg);
            }
        } else {
            for &b in level {
                let seg = self.pull_block(b, x);
                x[self.block(b)].copy_from_slice(&seg);
            }
        }
    }

    /// `[D^-1; W] * x_b` for one block: new block values and the panel update.
    fn merged_block(&self, b: usize, dinv: &[DenseMatrix], panels: &[Panel], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let seg = &x[self.block(b)];
        let p = &panels[b];
        let upd = (0..p.rows.len())
            .map(|t| p.w.row(t).iter().zip(seg).map(|(w, v)| w * v).sum())
            .collect();
        (dinv[b].matvec(seg), upd)
    }

    fn merged_level(&self, level: &[usize], dinv: &[DenseMatrix], panels: &[Panel], x: &mut [f64], parallel: bool) {
        let results: Vec<(Vec<f64>, Vec<f64>)> = if parallel {
            level.par_iter().map(|&b| self.merged_block(b, dinv, panels, x)).collect()
        } else {
            level.iter().map(|&b| self.merged_block(b, dinv, panels, x)).collect()
        };
        for (&b, (seg, upd)) in level.iter().zip(results) {
            x[self.block(b)].copy_from_slice(&seg);
            for (&i, u) in panels[b].rows.iter().zip(upd) {
                x[i] += u;
            }
        }
    }
}

fn row_dot(a: &CsrMatrix, i: usize, x: &[f64]) -> f64 {
    let (cols, vals) = a.row(i);
    cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
}
