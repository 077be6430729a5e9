use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pattern::IluPattern;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// How entries of `S` are updated within one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Row-major Gauss-Seidel: every update sees all earlier updates. One
    /// sweep already reproduces the exact incomplete factorization.
    InPlace,
    /// Jacobi over work units of `block_size` consecutive entries: a unit
    /// sees its own earlier updates and the previous sweep elsewhere.
    /// Deterministic for any thread count.
    #[default]
    Synchronous,
    /// Work units run concurrently and read whatever values are current.
    /// Results depend on the schedule.
    Asynchronous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FastIluParams {
    pub sweeps: usize,
    /// Damping factor in `(0, 1]`.
    pub damping: f64,
    /// Start from FastILU(k-1) on the restricted pattern instead of from `A`.
    pub warmup: bool,
    pub block_size: usize,
    /// Diagonal shift `alpha`: the factorization targets `A + alpha*diag(|a_ii|)`.
    pub shift: f64,
    pub mode: SweepMode,
}

impl Default for FastIluParams {
    fn default() -> Self {
        Self {
            sweeps: 2,
            damping: 1.0,
            warmup: false,
            block_size: 1,
            shift: 0.0,
            mode: SweepMode::Synchronous,
        }
    }
}

impl FastIluParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidOption(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if self.block_size == 0 {
            return Err(Error::InvalidOption("block_size must be at least 1".into()));
        }
        if !(self.shift >= 0.0 && self.shift.is_finite()) {
            return Err(Error::InvalidOption(format!("shift must be a finite value >= 0, got {}", self.shift)));
        }
        Ok(())
    }
}

/// Shift applied when a zero pivot appears and the caller asked for shifting
/// without giving a magnitude.
pub const DEFAULT_SHIFT: f64 = 1e-2;
const MAX_SHIFT_RESTARTS: usize = 3;

/// Incomplete factors on the pattern `S`: strictly lower entries hold `L`
/// (unit diagonal implied), the rest hold `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct IluFactors {
    pattern: IluPattern,
    values: Vec<f64>,
    /// `||(A' - L U)|_S||_F` after every sweep (empty for exact elimination).
    pub residuals: Vec<f64>,
    /// Shift actually used, after any doubling restarts.
    pub shift: f64,
    pub shift_restarts: usize,
}

impl IluFactors {
    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn pattern(&self) -> &IluPattern {
        &self.pattern
    }

    /// Values aligned with the pattern's column indices.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `nnz(L) + nnz(U)` with the unit diagonal of `L` not counted.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Unit lower factor with its diagonal stored.
    pub fn l(&self) -> CsrMatrix {
        let p = &self.pattern;
        let mut t = Vec::with_capacity(p.diag_pos.iter().zip(&p.row_ptr).map(|(d, r)| d - r + 1).sum());
        for i in 0..p.n {
            for q in p.row_ptr[i]..p.diag_pos[i] {
                t.push((i, p.col_idx[q], self.values[q]));
            }
            t.push((i, i, 1.0));
        }
        CsrMatrix::from_triplets(p.n, p.n, &t).expect("valid pattern")
    }

    pub fn u(&self) -> CsrMatrix {
        let p = &self.pattern;
        let mut t = Vec::new();
        for i in 0..p.n {
            for q in p.diag_pos[i]..p.row_ptr[i + 1] {
                t.push((i, p.col_idx[q], self.values[q]));
            }
        }
        CsrMatrix::from_triplets(p.n, p.n, &t).expect("valid pattern")
    }

    /// Exact solve with the factors: `x = U^-1 L^-1 r`.
    pub fn apply(&self, r: &[f64], x: &mut [f64]) {
        let p = &self.pattern;
        let v = &self.values;
        for i in 0..p.n {
            let mut s = r[i];
            for q in p.row_ptr[i]..p.diag_pos[i] {
                s -= v[q] * x[p.col_idx[q]];
            }
            x[i] = s;
        }
        for i in (0..p.n).rev() {
            let d = p.diag_pos[i];
            let mut s = x[i];
            for q in d + 1..p.row_ptr[i + 1] {
                s -= v[q] * x[p.col_idx[q]];
            }
            x[i] = s / v[d];
        }
    }
}

/// Values of `A + alpha*diag(|a_ii|)` scattered onto `S` (fill entries 0).
fn shifted_values(a: &CsrMatrix, pat: &IluPattern, alpha: f64) -> Result<Vec<f64>> {
    if a.nrows() != pat.n || a.ncols() != pat.n {
        return Err(Error::DimensionMismatch {
            expected: pat.n,
            found: a.nrows(),
        });
    }
    let mut out = vec![0.0; pat.nnz()];
    for i in 0..pat.n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let q = pat.position(i, j).ok_or(Error::PatternMismatch)?;
            out[q] = v;
        }
        let d = pat.diag_pos[i];
        out[d] += alpha * out[d].abs();
    }
    Ok(out)
}

/// Runs `attempt` with the caller's shift; on a zero pivot, either fails
/// (no shift requested) or doubles the shift up to three times.
fn with_shift_protocol<T>(alpha: f64, mut attempt: impl FnMut(f64) -> std::result::Result<T, PivotFailure>) -> Result<(T, f64, usize)> {
    let mut alpha = alpha;
    let mut restarts = 0;
    loop {
        match attempt(alpha) {
            Ok(v) => return Ok((v, alpha, restarts)),
            Err(PivotFailure::Other(e)) => return Err(e),
            Err(PivotFailure::Zero(row)) => {
                if alpha == 0.0 {
                    return Err(Error::ZeroPivot {
                        row,
                        advice: format!("retry with a diagonal shift (for example {DEFAULT_SHIFT})"),
                    });
                }
                if restarts == MAX_SHIFT_RESTARTS {
                    return Err(Error::ZeroPivot {
                        row,
                        advice: format!("still zero after {MAX_SHIFT_RESTARTS} shift doublings (alpha = {alpha})"),
                    });
                }
                alpha *= 2.0;
                restarts += 1;
            }
        }
    }
}

enum PivotFailure {
    Zero(usize),
    Other(Error),
}

impl From<Error> for PivotFailure {
    fn from(e: Error) -> Self {
        PivotFailure::Other(e)
    }
}

/// Exact elimination restricted to `S` (IKJ order), the fixed point of the
/// sweeps.
pub fn standard_ilu_numeric(a: &CsrMatrix, pat: &IluPattern, shift: f64) -> Result<IluFactors> {
    let (values, alpha, restarts) = with_shift_protocol(shift, |alpha| {
        let mut v = shifted_values(a, pat, alpha)?;
        let mut map = vec![usize::MAX; pat.n];
        for i in 0..pat.n {
            let (lo, hi) = (pat.row_ptr[i], pat.row_ptr[i + 1]);
            for q in lo..hi {
                map[pat.col_idx[q]] = q;
            }
            for q in lo..pat.diag_pos[i] {
                let t = pat.col_idx[q];
                let utt = v[pat.diag_pos[t]];
                if utt == 0.0 {
                    return Err(PivotFailure::Zero(t));
                }
                let lit = v[q] / utt;
                v[q] = lit;
                for r in pat.diag_pos[t] + 1..pat.row_ptr[t + 1] {
                    let j = pat.col_idx[r];
                    let m = map[j];
                    if m != usize::MAX {
                        v[m] -= lit * v[r];
                    }
                }
            }
            if v[pat.diag_pos[i]] == 0.0 {
                return Err(PivotFailure::Zero(i));
            }
            for q in lo..hi {
                map[pat.col_idx[q]] = usize::MAX;
            }
        }
        Ok(v)
    })?;
    Ok(IluFactors {
        pattern: pat.clone(),
        values,
        residuals: Vec::new(),
        shift: alpha,
        shift_restarts: restarts,
    })
}

/// Conventional starting guess: `l_ij = a_ij / a_jj`, `u_ij = a_ij`.
fn initial_guess(pat: &IluPattern, a: &[f64]) -> std::result::Result<Vec<f64>, PivotFailure> {
    let mut v = a.to_vec();
    for i in 0..pat.n {
        for q in pat.row_ptr[i]..pat.diag_pos[i] {
            let ujj = a[pat.diag_pos[pat.col_idx[q]]];
            if ujj == 0.0 {
                return Err(PivotFailure::Zero(pat.col_idx[q]));
            }
            v[q] = a[q] / ujj;
        }
    }
    Ok(v)
}

/// `a_ij - sum_{t < min(i,j)} l_it u_tj` for entry `q = (i, j)`, where
/// `val(p)` returns the value the caller is allowed to see at position `p`.
#[inline]
fn partial_sum(pat: &IluPattern, a: &[f64], i: usize, q: usize, val: &impl Fn(usize) -> f64) -> f64 {
    let j = pat.col_idx[q];
    let m = i.min(j);
    let mut s = a[q];
    // merge row i of L (columns < m) with column j of U (rows < m)
    let mut lp = pat.row_ptr[i];
    let lend = pat.diag_pos[i];
    let mut up = pat.ucol_ptr[j];
    let uend = pat.ucol_ptr[j + 1];
    while lp < lend && up < uend {
        let t_l = pat.col_idx[lp];
        let t_u = pat.ucol_row[up];
        if t_l >= m || t_u >= m {
            break;
        }
        match t_l.cmp(&t_u) {
            std::cmp::Ordering::Less => lp += 1,
            std::cmp::Ordering::Greater => up += 1,
            std::cmp::Ordering::Equal => {
                s -= val(lp) * val(pat.ucol_pos[up]);
                lp += 1;
                up += 1;
            }
        }
    }
    s
}

/// One damped update of entry `q`; `Err(j)` when the pivot `u_jj` is zero.
#[inline]
fn update_entry(pat: &IluPattern, a: &[f64], i: usize, q: usize, omega: f64, val: impl Fn(usize) -> f64) -> std::result::Result<f64, usize> {
    let j = pat.col_idx[q];
    let s = partial_sum(pat, a, i, q, &val);
    let old = val(q);
    if i > j {
        let ujj = val(pat.diag_pos[j]);
        if ujj == 0.0 {
            return Err(j);
        }
        Ok((1.0 - omega) * old + omega * s / ujj)
    } else {
        Ok((1.0 - omega) * old + omega * s)
    }
}

fn row_of_positions(pat: &IluPattern) -> Vec<usize> {
    let mut rows = Vec::with_capacity(pat.nnz());
    for i in 0..pat.n {
        rows.extend(std::iter::repeat_n(i, pat.row_ptr[i + 1] - pat.row_ptr[i]));
    }
    rows
}

fn sweep(pat: &IluPattern, rows: &[usize], a: &[f64], v: &mut [f64], p: &FastIluParams) -> std::result::Result<(), usize> {
    let omega = p.damping;
    match p.mode {
        SweepMode::InPlace => {
            for q in 0..v.len() {
                let new = update_entry(pat, a, rows[q], q, omega, |r| v[r])?;
                v[q] = new;
            }
        }
        SweepMode::Synchronous => {
            let old = v.to_vec();
            let bs = p.block_size;
            let work = |(u, chunk): (usize, &mut [f64])| -> std::result::Result<(), usize> {
                let start = u * bs;
                for t in 0..chunk.len() {
                    let q = start + t;
                    let new = update_entry(pat, a, rows[q], q, omega, |r| {
                        if r >= start && r < q {
                            chunk[r - start]
                        } else {
                            old[r]
                        }
                    })?;
                    chunk[t] = new;
                }
                Ok(())
            };
            if rayon::current_num_threads() > 1 && v.len() > 4096 {
                v.par_chunks_mut(bs).enumerate().try_for_each(work)?;
            } else {
                v.chunks_mut(bs).enumerate().try_for_each(work)?;
            }
        }
        SweepMode::Asynchronous => {
            let cells: Vec<AtomicU64> = v.iter().map(|x| AtomicU64::new(x.to_bits())).collect();
            let load = |r: usize| f64::from_bits(cells[r].load(Ordering::Relaxed));
            let nunits = v.len().div_ceil(p.block_size);
            (0..nunits).into_par_iter().try_for_each(|u| {
                let start = u * p.block_size;
                let end = (start + p.block_size).min(cells.len());
                for q in start..end {
                    let new = update_entry(pat, a, rows[q], q, omega, load)?;
                    cells[q].store(new.to_bits(), Ordering::Relaxed);
                }
                Ok::<(), usize>(())
            })?;
            for (x, c) in v.iter_mut().zip(&cells) {
                *x = f64::from_bits(c.load(Ordering::Relaxed));
            }
        }
    }
    Ok(())
}

/// `||(A' - L U)|_S||_F`.
pub(crate) fn pattern_residual(pat: &IluPattern, a: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..pat.n {
        for q in pat.row_ptr[i]..pat.row_ptr[i + 1] {
            let j = pat.col_idx[q];
            let s = partial_sum(pat, a, i, q, &|r| v[r]);
            let r = if i > j { s - v[q] * v[pat.diag_pos[j]] } else { s - v[q] };
            acc += r * r;
        }
    }
    acc.sqrt()
}

fn fastilu_on(a: &CsrMatrix, pat: &IluPattern, p: &FastIluParams, alpha: f64) -> std::result::Result<(Vec<f64>, Vec<f64>), PivotFailure> {
    let av = shifted_values(a, pat, alpha)?;
    let mut v = if p.warmup && pat.k > 0 {
        let coarse = pat.restrict(pat.k - 1);
        let (cv, _) = fastilu_on(a, &coarse, p, alpha)?;
        let mut v = vec![0.0; pat.nnz()];
        for i in 0..coarse.n {
            for q in coarse.row_ptr[i]..coarse.row_ptr[i + 1] {
                let pos = pat.position(i, coarse.col_idx[q]).expect("restricted pattern is a subset");
                v[pos] = cv[q];
            }
        }
        v
    } else {
        initial_guess(pat, &av)?
    };
    let rows = row_of_positions(pat);
    let mut residuals = Vec::with_capacity(p.sweeps);
    for _ in 0..p.sweeps {
        sweep(pat, &rows, &av, &mut v, p).map_err(PivotFailure::Zero)?;
        residuals.push(pattern_residual(pat, &av, &v));
    }
    if let Some(i) = (0..pat.n).find(|&i| v[pat.diag_pos[i]] == 0.0) {
        return Err(PivotFailure::Zero(i));
    }
    Ok((v, residuals))
}

/// Fixed-point ILU: `sweeps` applications of
/// `l_ij <- (1-w) l_ij + w (a_ij - sum_{t<j} l_it u_tj) / u_jj` and
/// `u_ij <- (1-w) u_ij + w (a_ij - sum_{t<i} l_it u_tj)` over `S`.
pub fn fastilu_numeric(a: &CsrMatrix, pat: &IluPattern, params: &FastIluParams) -> Result<IluFactors> {
    params.validate()?;
    let ((values, residuals), alpha, restarts) = with_shift_protocol(params.shift, |alpha| fastilu_on(a, pat, params, alpha))?;
    Ok(IluFactors {
        pattern: pat.clone(),
        values,
        residuals,
        shift: alpha,
        shift_restarts: restarts,
    })
}
