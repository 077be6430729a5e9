use serde::Serialize;

use super::numeric::{BlockFactors, LuFactors};
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, DenseMultiVector};

impl LuFactors {
    /// Solves `A x = b` for one right-hand side.
    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut c = self.row_perm.apply_vec(b);
        let mut work = Vec::new();
        for k in 0..self.num_blocks() {
            let range = self.block_range(k);
            for i in range.clone() {
                let (cols, vals) = self.coupling.row(i);
                let mut s = c[i];
                for (&j, &v) in cols.iter().zip(vals) {
                    s -= v * c[j];
                }
                c[i] = s;
            }
            solve_block(&self.blocks[k], &mut c[range], &mut work);
        }
        Ok(self.col_perm.apply_inverse_vec(&c))
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &DenseMultiVector) -> Result<DenseMultiVector> {
        let mut x = DenseMultiVector::zeros(b.nrows(), b.ncols());
        if b.nrows() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: b.nrows(),
            });
        }
        for j in 0..b.ncols() {
            let xj = self.solve_vec(b.col(j))?;
            x.col_mut(j).copy_from_slice(&xj);
        }
        Ok(x)
    }
}

/// In-place `P B = L U` solve on one block's segment of the permuted vector.
fn solve_block(f: &BlockFactors, r: &mut [f64], z: &mut Vec<f64>) {
    let m = f.size();
    z.clear();
    z.extend(f.pivot_rows.iter().map(|&p| r[p]));
    for j in 0..m {
        let zj = z[j];
        if zj != 0.0 {
            let (rows, vals) = f.l.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                z[i] -= v * zj;
            }
        }
    }
    for j in (0..m).rev() {
        let (rows, vals) = f.u.col(j);
        let last = rows.len() - 1;
        let xj = z[j] / vals[last];
        z[j] = xj;
        if xj != 0.0 {
            for (&i, &v) in rows[..last].iter().zip(&vals[..last]) {
                z[i] -= v * xj;
            }
        }
    }
    r.copy_from_slice(z);
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub x: Vec<f64>,
    pub steps: usize,
    /// `||b - A x||_2 / ||b||_2` before the first and after every step.
    pub residuals: Vec<f64>,
    pub final_residual: f64,
    /// The residual grew on two consecutive steps; `x` is the best iterate.
    pub diverged: bool,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64], bnorm: f64, r: &mut [f64]) -> Result<f64> {
    a.spmv_into(x, r)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    Ok(norm2(r) / bnorm)
}

/// Classical refinement `x <- x + solve(b - A x)`.
pub fn iterative_refinement(
    a: &CsrMatrix,
    factors: &LuFactors,
    b: &[f64],
    max_steps: usize,
    target: f64,
) -> Result<Refinement> {
    let n = a.require_square()?;
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(Refinement {
            x: vec![0.0; n],
            steps: 0,
            residuals: vec![0.0],
            final_residual: 0.0,
            diverged: false,
        });
    }
    let mut x = factors.solve_vec(b)?;
    let mut r = vec![0.0; n];
    let mut res = relative_residual(a, &x, b, bnorm, &mut r)?;
    let mut residuals = vec![res];
    let mut best = (res, x.clone());
    let mut growth = 0;
    let mut steps = 0;
    let mut diverged = false;
    while res > target && steps < max_steps {
        let d = factors.solve_vec(&r)?;
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += di;
        }
        steps += 1;
        let next = relative_residual(a, &x, b, bnorm, &mut r)?;
        residuals.push(next);
        growth = if next > res { growth + 1 } else { 0 };
        res = next;
        if res < best.0 {
            best = (res, x.clone());
        }
        if growth >= 2 {
            diverged = true;
            break;
        }
    }
    Ok(Refinement {
        x: best.1,
        steps,
        residuals,
        final_residual: best.0,
        diverged,
    })
}
