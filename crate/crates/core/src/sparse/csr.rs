use rayon::prelude::*;

use super::{CscMatrix, DenseMatrix, DenseMultiVector, Permutation};
use crate::error::{Error, Result};

/// Compressed sparse row matrix in canonical form: column indices strictly
/// increasing within each row, no duplicates. Explicit zeros are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Validates the canonical-form invariants.
    pub fn try_new(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_ptr has length {}, expected {}",
                row_ptr.len(),
                nrows + 1
            )));
        }
        if row_ptr[0] != 0 || row_ptr[nrows] != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::InvalidStructure(
                "row_ptr endpoints do not match col_idx/values lengths".into(),
            ));
        }
        for i in 0..nrows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::InvalidStructure(format!("row_ptr decreases at row {i}")));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidStructure(format!(
                        "row {i}: column indices not strictly increasing"
                    )));
                }
            }
            if let Some(&c) = cols.last() {
                if c >= ncols {
                    return Err(Error::InvalidStructure(format!(
                        "row {i}: column {c} out of bounds for {ncols} columns"
                    )));
                }
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub(crate) fn from_parts_unchecked(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert!(Self::try_new(nrows, ncols, row_ptr.clone(), col_idx.clone(), values.clone()).is_ok());
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Assembles from `(row, col, value)` triplets. Duplicates are summed;
    /// zeros (explicit or produced by summation) stay in the pattern.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidStructure(format!(
                    "triplet ({r}, {c}) out of bounds for {nrows}x{ncols}"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let k = next[r];
            cols[k] = c;
            vals[k] = v;
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            // stable sort keeps the summation order of duplicates equal to input order
            scratch.sort_by_key(|e| e.0);
            for &(c, v) in &scratch {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Keeps only the nonzero entries of a dense matrix.
    pub fn from_dense(dense: &DenseMatrix) -> Self {
        let mut trip = Vec::new();
        for i in 0..dense.nrows() {
            for j in 0..dense.ncols() {
                let v = dense[(i, j)];
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(dense.nrows(), dense.ncols(), &trip).expect("in-bounds triplets")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values may be changed freely; the pattern may not.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.nnz() {
            return Err(Error::DimensionMismatch {
                expected: self.nnz(),
                found: values.len(),
            });
        }
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.nrows)
        } else {
            Err(Error::NotSquare {
                nrows: self.nrows,
                ncols: self.ncols,
            })
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i).unwrap_or(0.0))
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn transpose(&self) -> CsrMatrix {
        let csc = self.to_csc();
        let (nrows, ncols, col_ptr, row_idx, values) = csc.into_parts();
        CsrMatrix {
            nrows: ncols,
            ncols: nrows,
            row_ptr: col_ptr,
            col_idx: row_idx,
            values,
        }
    }

    pub fn to_csc(&self) -> CscMatrix {
        let mut col_ptr = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            col_ptr[c + 1] += 1;
        }
        for j in 0..self.ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut next = col_ptr.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[k];
                row_idx[next[c]] = i;
                values[next[c]] = self.values[k];
                next[c] += 1;
            }
        }
        CscMatrix::from_parts_unchecked(self.nrows, self.ncols, col_ptr, row_idx, values)
    }

    /// `y = A x`, each row accumulated left to right.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.check_spmv_dims(x, y)?;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(i, x);
        }
        Ok(())
    }

    /// Row-parallel product. Each row is reduced by a single worker in the
    /// same order as [`CsrMatrix::spmv`], so results are bitwise identical.
    pub fn spmv_par(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows];
        self.check_spmv_dims(x, &y)?;
        y.par_iter_mut()
            .enumerate()
            .with_min_len(256)
            .for_each(|(i, yi)| *yi = self.row_dot(i, x));
        Ok(y)
    }

    /// Sparse matrix times a dense multivector.
    pub fn spmm(&self, x: &DenseMultiVector) -> Result<DenseMultiVector> {
        if x.nrows() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: x.nrows(),
            });
        }
        let mut out = DenseMultiVector::zeros(self.nrows, x.ncols());
        for j in 0..x.ncols() {
            self.spmv_into(x.col(j), out.col_mut(j))?;
        }
        Ok(out)
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            s += self.values[k] * x[self.col_idx[k]];
        }
        s
    }

    fn check_spmv_dims(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: x.len(),
            });
        }
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: y.len(),
            });
        }
        Ok(())
    }

    /// `result[P_r(i), P_c(j)] = A[i, j]`, returned in canonical form.
    pub fn permute(&self, row_perm: &Permutation, col_perm: &Permutation) -> Result<CsrMatrix> {
        if row_perm.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: row_perm.len(),
            });
        }
        if col_perm.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: col_perm.len(),
            });
        }
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for new_i in 0..self.nrows {
            let old_i = row_perm.apply_inverse(new_i);
            let (cols, vals) = self.row(old_i);
            scratch.clear();
            scratch.extend(cols.iter().zip(vals).map(|(&c, &v)| (col_perm.apply(c), v)));
            scratch.sort_unstable_by_key(|e| e.0);
            for &(c, v) in &scratch {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Rows and columns `range` as a new square matrix with local indices.
    pub fn principal_submatrix(&self, range: std::ops::Range<usize>) -> CsrMatrix {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in range.clone() {
            let (cols, vals) = self.row(i);
            let lo = cols.partition_point(|&c| c < range.start);
            let hi = cols.partition_point(|&c| c < range.end);
            for k in lo..hi {
                col_idx.push(cols[k] - range.start);
                values.push(vals[k]);
            }
            row_ptr.push(col_idx.len());
        }
        let m = range.len();
        CsrMatrix {
            nrows: m,
            ncols: m,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn norm_fro(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.ncols];
        for (&c, &v) in self.col_idx.iter().zip(&self.values) {
            sums[c] += v.abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Lower/upper triangle checks used by the triangular solvers.
    pub fn is_lower_triangular(&self) -> bool {
        (0..self.nrows).all(|i| self.row(i).0.last().is_none_or(|&c| c <= i))
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.nrows).all(|i| self.row(i).0.first().is_none_or(|&c| c >= i))
    }
}
