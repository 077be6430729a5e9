use rayon::prelude::*;

use super::numeric::IluFactors;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::Execution;

/// Jacobi iteration for a triangular system `T x = b`:
/// `x_i <- (1-w) x_i + w (b_i - sum_{j != i} t_ij x_j) / t_ii`, computed out
/// of place. A system with `p` dependency levels is solved exactly after `p`
/// undamped sweeps from any start.
#[derive(Debug, Clone)]
pub struct FastTrsv {
    t: CsrMatrix,
    diag: Vec<f64>,
}

impl FastTrsv {
    pub fn new(t: &CsrMatrix) -> Result<Self> {
        let n = t.require_square()?;
        if !t.is_lower_triangular() && !t.is_upper_triangular() {
            return Err(Error::NotTriangular("lower or upper"));
        }
        let mut diag = vec![0.0; n];
        for (i, d) in diag.iter_mut().enumerate() {
            *d = t.get(i, i).unwrap_or(0.0);
            if *d == 0.0 {
                return Err(Error::ZeroDiagonal { row: i });
            }
        }
        Ok(Self { t: t.clone(), diag })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    fn row_update(&self, i: usize, b: &[f64], x: &[f64], omega: f64) -> f64 {
        let (cols, vals) = self.t.row(i);
        let mut s = b[i];
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                s -= v * x[j];
            }
        }
        (1.0 - omega) * x[i] + omega * s / self.diag[i]
    }

    pub fn solve(&self, b: &[f64], sweeps: usize, x0: Option<&[f64]>, damping: f64, exec: Execution) -> Result<Vec<f64>> {
        let n = self.n();
        for len in std::iter::once(b.len()).chain(x0.map(<[f64]>::len)) {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        let mut next = vec![0.0; n];
        for _ in 0..sweeps {
            match exec {
                Execution::Sequential => {
                    for (i, y) in next.iter_mut().enumerate() {
                        *y = self.row_update(i, b, &x, damping);
                    }
                }
                Execution::Parallel => {
                    next.par_iter_mut()
                        .enumerate()
                        .for_each(|(i, y)| *y = self.row_update(i, b, &x, damping));
                }
            }
            std::mem::swap(&mut x, &mut next);
        }
        Ok(x)
    }
}

/// One-shot form of [`FastTrsv::solve`], undamped.
pub fn fast_sptrsv(t: &CsrMatrix, b: &[f64], sweeps: usize, x0: Option<&[f64]>) -> Result<Vec<f64>> {
    FastTrsv::new(t)?.solve(b, sweeps, x0, 1.0, Execution::Sequential)
}

/// Applies ILU factors with Jacobi triangular solves instead of substitution.
#[derive(Debug, Clone)]
pub struct FastIluApply {
    lower: FastTrsv,
    upper: FastTrsv,
    pub sweeps: usize,
    pub damping: f64,
    pub execution: Execution,
}

impl FastIluApply {
    pub fn new(f: &IluFactors, sweeps: usize, damping: f64, execution: Execution) -> Result<Self> {
        Ok(Self {
            lower: FastTrsv::new(&f.l())?,
            upper: FastTrsv::new(&f.u())?,
            sweeps,
            damping,
            execution,
        })
    }

    pub fn n(&self) -> usize {
        self.lower.n()
    }

    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        let y = self.lower.solve(r, self.sweeps, None, self.damping, self.execution)?;
        self.upper.solve(&y, self.sweeps, None, self.damping, self.execution)
    }
}
