use super::CsrMatrix;
use crate::error::{Error, Result};

/// Compressed sparse column matrix; the column-wise mirror of [`CsrMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn try_new(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        // the transpose of a valid CSC is a valid CSR
        CsrMatrix::try_new(ncols, nrows, col_ptr, row_idx, values)
            .map(|t| {
                let (ncols, nrows) = (t.nrows(), t.ncols());
                Self {
                    nrows,
                    ncols,
                    col_ptr: t.row_ptr().to_vec(),
                    row_idx: t.col_idx().to_vec(),
                    values: t.values().to_vec(),
                }
            })
            .map_err(|e| match e {
                Error::InvalidStructure(m) => Error::InvalidStructure(m.replace("row", "column")),
                other => other,
            })
    }

    pub(crate) fn from_parts_unchecked(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub(crate) fn into_parts(self) -> (usize, usize, Vec<usize>, Vec<usize>, Vec<f64>) {
        (self.nrows, self.ncols, self.col_ptr, self.row_idx, self.values)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (rows, vals) = self.col(j);
        rows.binary_search(&i).ok().map(|k| vals[k])
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let as_csr_of_transpose = CsrMatrix::from_parts_unchecked(
            self.ncols,
            self.nrows,
            self.col_ptr.clone(),
            self.row_idx.clone(),
            self.values.clone(),
        );
        as_csr_of_transpose.transpose()
    }
}
