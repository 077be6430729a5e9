use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use super::options::WeightMatchingScope;
use super::symbolic::{BlockPlan, SymbolicPlan};
use crate::error::{Error, Result};
use crate::ordering::max_weight_matching;
use crate::sparse::{CscMatrix, CsrMatrix, Permutation};
use crate::Execution;

/// A pivot that had to be replaced by `eps * ||A_bb||_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbedPivot {
    pub block: usize,
    pub column: usize,
    pub original_magnitude: f64,
}

/// LU factors of one diagonal block, `P B = L U` in block-local positions.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFactors {
    /// Strictly lower part of the unit lower factor.
    pub l: CscMatrix,
    /// Upper factor; the diagonal is the last entry of every column.
    pub u: CscMatrix,
    /// `pivot_rows[k]` is the block-local row eliminated at step `k`.
    pub pivot_rows: Vec<usize>,
    /// Largest candidate magnitude seen when choosing each pivot.
    pub pivot_colmax: Vec<f64>,
    /// Pivoting domains (block-local ranges) used during factorization.
    pub domains: Vec<Range<usize>>,
    pub domain_levels: Vec<Vec<usize>>,
    /// Number of storage regrowths (each restarts the block).
    pub reallocations: usize,
}

impl BlockFactors {
    pub fn size(&self) -> usize {
        self.pivot_rows.len()
    }

    pub fn u_diag(&self, j: usize) -> f64 {
        let (_, vals) = self.u.col(j);
        *vals.last().expect("every U column holds its diagonal")
    }

    /// Unit lower factor with its diagonal stored explicitly.
    pub fn l_with_unit_diagonal(&self) -> CsrMatrix {
        let m = self.size();
        let mut t = Vec::with_capacity(self.l.nnz() + m);
        for j in 0..m {
            t.push((j, j, 1.0));
            let (rows, vals) = self.l.col(j);
            t.extend(rows.iter().zip(vals).map(|(&r, &v)| (r, j, v)));
        }
        CsrMatrix::from_triplets(m, m, &t).expect("in-bounds factor entries")
    }

    pub fn u_csr(&self) -> CsrMatrix {
        self.u.to_csr()
    }
}

/// Numeric factorization of every BTF diagonal block plus the coupling
/// entries needed for block forward substitution.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors {
    pub row_perm: Permutation,
    pub col_perm: Permutation,
    pub block_offsets: Vec<usize>,
    pub blocks: Vec<BlockFactors>,
    /// Entries of the permuted matrix below the block diagonal; referenced
    /// by the solve, never factorized.
    pub coupling: CsrMatrix,
    pub perturbed_pivots: Vec<PerturbedPivot>,
}

impl LuFactors {
    pub fn n(&self) -> usize {
        self.row_perm.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_range(&self, k: usize) -> Range<usize> {
        self.block_offsets[k]..self.block_offsets[k + 1]
    }

    /// Stored entries of `L + U` (unit diagonal of L not counted).
    pub fn nnz_lu(&self) -> usize {
        self.blocks.iter().map(|b| b.l.nnz() + b.u.nnz()).sum()
    }

    pub fn reallocations(&self) -> usize {
        self.blocks.iter().map(|b| b.reallocations).sum()
    }

    /// Columns whose pivot violates `|u_jj| >= tau * colmax` without a
    /// perturbation record, as `(block, column)` pairs.
    pub fn pivot_violations(&self, tau: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, b) in self.blocks.iter().enumerate() {
            for j in 0..b.size() {
                let ok = b.u_diag(j).abs() >= tau * b.pivot_colmax[j]
                    || self.perturbed_pivots.iter().any(|p| p.block == k && p.column == j);
                if !ok {
                    out.push((k, j));
                }
            }
        }
        out
    }
}

/// Numeric phase: gathers the values of `a` into the analyzed structure and
/// factorizes every diagonal block column by column.
pub fn numeric_factorize(plan: &SymbolicPlan, a: &CsrMatrix) -> Result<LuFactors> {
    if !plan.matches_pattern(a) {
        return Err(Error::PatternMismatch);
    }
    let opts = &plan.options;
    let b = a.permute(&plan.row_perm, &plan.col_perm)?;
    let n = b.nrows();

    let mut block_of = vec![0usize; n];
    for (k, bp) in plan.blocks.iter().enumerate() {
        for p in bp.range.clone() {
            block_of[p] = k;
        }
    }
    let mut coupling_trip = Vec::new();
    for i in 0..n {
        let (cols, vals) = b.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if block_of[j] != block_of[i] {
                coupling_trip.push((i, j, v));
            }
        }
    }
    let coupling = CsrMatrix::from_triplets(n, n, &coupling_trip)?;

    let diag_rows = preferred_pivots(plan, &b)?;

    let ctx = FactorContext {
        tau: opts.pivot_tol,
        perturb: opts.perturb_zero_pivots,
        growth: opts.realloc_growth,
        execution: opts.execution,
    };
    let work = |k: usize| {
        let bp = &plan.blocks[k];
        let sub = b.principal_submatrix(bp.range.clone()).to_csc();
        factor_block(k, bp, &sub, &diag_rows[k], &ctx)
    };
    let results: Vec<Result<(BlockFactors, Vec<PerturbedPivot>)>> = match opts.execution {
        Execution::Sequential => (0..plan.blocks.len()).map(work).collect(),
        Execution::Parallel => (0..plan.blocks.len()).into_par_iter().map(work).collect(),
    };

    let mut blocks = Vec::with_capacity(results.len());
    let mut perturbed_pivots = Vec::new();
    for r in results {
        let (bf, pert) = r?;
        blocks.push(bf);
        perturbed_pivots.extend(pert);
    }
    let mut block_offsets = vec![0];
    block_offsets.extend(plan.blocks.iter().map(|bp| bp.range.end));
    Ok(LuFactors {
        row_perm: plan.row_perm.clone(),
        col_perm: plan.col_perm.clone(),
        block_offsets,
        blocks,
        coupling,
        perturbed_pivots,
    })
}

/// Preferred pivot row of every block column: the diagonal, or the row
/// assigned by the maximum weight matching when enabled.
fn preferred_pivots(plan: &SymbolicPlan, b: &CsrMatrix) -> Result<Vec<Vec<usize>>> {
    let opts = &plan.options;
    let identity = || plan.blocks.iter().map(|bp| (0..bp.len()).collect()).collect();
    if !opts.use_weight_matching {
        return Ok(identity());
    }
    match opts.weight_matching_scope {
        WeightMatchingScope::PerBlock => plan
            .blocks
            .iter()
            .map(|bp| {
                let sub = b.principal_submatrix(bp.range.clone());
                let m = max_weight_matching(&sub)?;
                Ok(m.row_for_col().iter().map(|r| r.unwrap()).collect())
            })
            .collect(),
        WeightMatchingScope::Global => {
            let m = max_weight_matching(b)?;
            let rows = m.row_for_col();
            Ok(plan
                .blocks
                .iter()
                .map(|bp| {
                    bp.range
                        .clone()
                        .map(|c| {
                            let r = rows[c].unwrap();
                            debug_assert!(bp.range.contains(&r), "perfect matching left its diagonal block");
                            r - bp.range.start
                        })
                        .collect()
                })
                .collect())
        }
    }
}

struct FactorContext {
    tau: f64,
    perturb: bool,
    growth: f64,
    execution: Execution,
}

/// One factorized column, row ids still in block-local original numbering.
#[derive(Debug, Clone)]
struct Column {
    l_rows: Vec<usize>,
    l_vals: Vec<f64>,
    u_pos: Vec<usize>,
    u_vals: Vec<f64>,
    diag: f64,
    pivot_row: usize,
    colmax: f64,
    perturbed: Option<f64>,
}

impl Column {
    fn nnz(&self) -> usize {
        self.l_rows.len() + self.u_pos.len() + 1
    }
}

/// Result of factorizing one pivoting domain.
struct DomainResult {
    columns: Vec<Column>,
    nnz: usize,
}

enum DomainError {
    Overflow,
    Singular(usize),
}

/// State committed by earlier schedule levels; read-only while a level runs.
struct Frozen {
    pinv: Vec<Option<usize>>,
    columns: Vec<Option<Column>>,
}

fn factor_block(
    block: usize,
    bp: &BlockPlan,
    sub: &CscMatrix,
    diag_row: &[usize],
    ctx: &FactorContext,
) -> Result<(BlockFactors, Vec<PerturbedPivot>)> {
    let m = sub.ncols();
    let norm1 = (0..m)
        .map(|j| sub.col(j).1.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let perturbation = f64::EPSILON * if norm1 > 0.0 { norm1 } else { 1.0 };

    let mut budget = bp.alloc_nnz;
    let mut reallocations = 0;
    'restart: loop {
        let mut frozen = Frozen {
            pinv: vec![None; m],
            columns: vec![None; m],
        };
        let mut used = 0usize;
        for level in &bp.domain_levels {
            let remaining = budget.saturating_sub(used);
            let run = |&d: &usize| {
                factor_domain(
                    sub,
                    bp.domains[d].clone(),
                    diag_row,
                    &frozen,
                    ctx,
                    perturbation,
                    remaining,
                )
            };
            let results: Vec<std::result::Result<DomainResult, DomainError>> = match ctx.execution {
                Execution::Parallel if level.len() > 1 => level.par_iter().map(run).collect(),
                _ => level.iter().map(run).collect(),
            };
            let mut level_nnz = 0;
            let mut done = Vec::with_capacity(results.len());
            for r in results {
                match r {
                    Ok(d) => {
                        level_nnz += d.nnz;
                        done.push(d);
                    }
                    Err(DomainError::Singular(column)) => {
                        return Err(Error::SingularBlock { block, column });
                    }
                    Err(DomainError::Overflow) => {
                        level_nnz = usize::MAX;
                        break;
                    }
                }
            }
            if level_nnz > remaining {
                budget = ((budget as f64 * ctx.growth).ceil() as usize).max(budget + 1);
                reallocations += 1;
                continue 'restart;
            }
            used += level_nnz;
            for (&d, res) in level.iter().zip(done) {
                let start = bp.domains[d].start;
                for (t, col) in res.columns.into_iter().enumerate() {
                    frozen.pinv[col.pivot_row] = Some(start + t);
                    frozen.columns[start + t] = Some(col);
                }
            }
        }
        return Ok(assemble(block, m, frozen, bp, reallocations));
    }
}

fn assemble(
    block: usize,
    m: usize,
    frozen: Frozen,
    bp: &BlockPlan,
    reallocations: usize,
) -> (BlockFactors, Vec<PerturbedPivot>) {
    let pinv: Vec<usize> = frozen
        .pinv
        .iter()
        .map(|p| p.expect("every row is pivotal after the last level"))
        .collect();
    let mut l_ptr = vec![0];
    let mut l_idx = Vec::new();
    let mut l_val = Vec::new();
    let mut u_ptr = vec![0];
    let mut u_idx = Vec::new();
    let mut u_val = Vec::new();
    let mut pivot_rows = Vec::with_capacity(m);
    let mut pivot_colmax = Vec::with_capacity(m);
    let mut perturbed = Vec::new();
    let mut scratch: Vec<(usize, f64)> = Vec::new();
    for (j, col) in frozen.columns.into_iter().enumerate() {
        let col = col.expect("every column factorized");
        scratch.clear();
        scratch.extend(col.l_rows.iter().map(|&r| pinv[r]).zip(col.l_vals.iter().copied()));
        scratch.sort_unstable_by_key(|e| e.0);
        for &(p, v) in &scratch {
            l_idx.push(p);
            l_val.push(v);
        }
        l_ptr.push(l_idx.len());

        scratch.clear();
        scratch.extend(col.u_pos.iter().copied().zip(col.u_vals.iter().copied()));
        scratch.sort_unstable_by_key(|e| e.0);
        for &(p, v) in &scratch {
            u_idx.push(p);
            u_val.push(v);
        }
        u_idx.push(j);
        u_val.push(col.diag);
        u_ptr.push(u_idx.len());

        pivot_rows.push(col.pivot_row);
        pivot_colmax.push(col.colmax);
        if let Some(orig) = col.perturbed {
            perturbed.push(PerturbedPivot {
                block,
                column: j,
                original_magnitude: orig,
            });
        }
    }
    let factors = BlockFactors {
        l: CscMatrix::from_parts_unchecked(m, m, l_ptr, l_idx, l_val),
        u: CscMatrix::from_parts_unchecked(m, m, u_ptr, u_idx, u_val),
        pivot_rows,
        pivot_colmax,
        domains: bp.domains.clone(),
        domain_levels: bp.domain_levels.clone(),
        reallocations,
    };
    (factors, perturbed)
}

/// Left-looking sparse LU of the columns in `range`, pivoting only among
/// rows of the same range. Rows outside the range that are not yet pivotal
/// belong to later (ancestor) domains and go to L unchanged.
fn factor_domain(
    a: &CscMatrix,
    range: Range<usize>,
    diag_row: &[usize],
    frozen: &Frozen,
    ctx: &FactorContext,
    perturbation: f64,
    limit: usize,
) -> std::result::Result<DomainResult, DomainError> {
    let m = a.ncols();
    let (lo, hi) = (range.start, range.end);
    let mut local_pinv: Vec<Option<usize>> = vec![None; hi - lo];
    let mut columns: Vec<Column> = Vec::with_capacity(hi - lo);

    let mut x = vec![0.0f64; m];
    let mut row_mark = vec![usize::MAX; m];
    let mut col_mark = vec![usize::MAX; m];
    let mut pattern: Vec<usize> = Vec::new();
    let mut topo: Vec<usize> = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut nnz = 0usize;

    let pivot_of = |r: usize, local_pinv: &[Option<usize>]| -> Option<usize> {
        if (lo..hi).contains(&r) {
            local_pinv[r - lo]
        } else {
            frozen.pinv[r]
        }
    };

    for j in lo..hi {
        // symbolic: reach of A(:, j) through the graph of L
        pattern.clear();
        topo.clear();
        let (a_rows, a_vals) = a.col(j);
        for &r in a_rows {
            if row_mark[r] != j {
                row_mark[r] = j;
                pattern.push(r);
            }
            let Some(k0) = pivot_of(r, &local_pinv) else { continue };
            if col_mark[k0] == j {
                continue;
            }
            col_mark[k0] = j;
            stack.push((k0, 0));
            while let Some(top) = stack.last_mut() {
                let k = top.0;
                let col = column_at(k, lo..hi, &columns, frozen);
                if top.1 < col.l_rows.len() {
                    let r2 = col.l_rows[top.1];
                    top.1 += 1;
                    if row_mark[r2] != j {
                        row_mark[r2] = j;
                        pattern.push(r2);
                    }
                    if let Some(k2) = pivot_of(r2, &local_pinv) {
                        if col_mark[k2] != j {
                            col_mark[k2] = j;
                            stack.push((k2, 0));
                        }
                    }
                } else {
                    stack.pop();
                    topo.push(k);
                }
            }
        }

        // numeric: sparse triangular solve in topological order
        for (&r, &v) in a_rows.iter().zip(a_vals) {
            x[r] = v;
        }
        let mut u_pos = Vec::with_capacity(topo.len());
        let mut u_vals = Vec::with_capacity(topo.len());
        for &k in topo.iter().rev() {
            let col = column_at(k, lo..hi, &columns, frozen);
            let xk = x[col.pivot_row];
            u_pos.push(k);
            u_vals.push(xk);
            for (&r, &l) in col.l_rows.iter().zip(&col.l_vals) {
                x[r] -= l * xk;
            }
        }

        // pivot among the non-pivotal rows of this domain
        let mut colmax = 0.0f64;
        let mut best: Option<usize> = None;
        for &r in &pattern {
            if !(lo..hi).contains(&r) || pivot_of(r, &local_pinv).is_some() {
                continue;
            }
            let v = x[r].abs();
            if best.is_none() || v > colmax || (v == colmax && r < best.unwrap()) {
                colmax = v;
                best = Some(r);
            }
        }
        let d = diag_row[j];
        let diag_candidate = (lo..hi).contains(&d) && row_mark[d] == j && pivot_of(d, &local_pinv).is_none();

        let (piv, diag, perturbed) = if colmax > 0.0 {
            let piv = if diag_candidate && x[d].abs() >= ctx.tau * colmax {
                d
            } else {
                best.unwrap()
            };
            (piv, x[piv], None)
        } else {
            if !ctx.perturb {
                for &r in &pattern {
                    x[r] = 0.0;
                }
                return Err(DomainError::Singular(j));
            }
            let piv = if (lo..hi).contains(&d) && pivot_of(d, &local_pinv).is_none() {
                d
            } else if let Some(b) = best {
                b
            } else {
                (lo..hi)
                    .find(|&r| local_pinv[r - lo].is_none())
                    .expect("an unpivoted row remains in the domain")
            };
            let orig = if row_mark[piv] == j { x[piv].abs() } else { 0.0 };
            (piv, perturbation, Some(orig))
        };

        let mut l_rows = Vec::new();
        let mut l_vals = Vec::new();
        for &r in &pattern {
            if r == piv || pivot_of(r, &local_pinv).is_some() {
                continue;
            }
            l_rows.push(r);
            l_vals.push(x[r] / diag);
        }
        for &r in &pattern {
            x[r] = 0.0;
        }
        local_pinv[piv - lo] = Some(j);
        let col = Column {
            l_rows,
            l_vals,
            u_pos,
            u_vals,
            diag,
            pivot_row: piv,
            colmax,
            perturbed,
        };
        nnz += col.nnz();
        columns.push(col);
        if nnz > limit {
            return Err(DomainError::Overflow);
        }
    }
    Ok(DomainResult { columns, nnz })
}

fn column_at<'a>(k: usize, range: Range<usize>, columns: &'a [Column], frozen: &'a Frozen) -> &'a Column {
    if range.contains(&k) {
        &columns[k - range.start]
    } else {
        frozen.columns[k].as_ref().expect("descendant column frozen")
    }
}
