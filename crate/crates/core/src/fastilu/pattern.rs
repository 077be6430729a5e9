use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Unified pattern `S` of `L + U` with the fill level of every entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IluPattern {
    pub(crate) n: usize,
    pub(crate) k: usize,
    pub(crate) row_ptr: Vec<usize>,
    pub(crate) col_idx: Vec<usize>,
    pub(crate) levels: Vec<usize>,
    pub(crate) diag_pos: Vec<usize>,
    // column view of the upper part: rows t <= j of column j, ascending
    pub(crate) ucol_ptr: Vec<usize>,
    pub(crate) ucol_row: Vec<usize>,
    pub(crate) ucol_pos: Vec<usize>,
}

impl IluPattern {
    fn from_rows(n: usize, k: usize, rows: Vec<Vec<(usize, usize)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut levels = Vec::new();
        let mut diag_pos = vec![0; n];
        for (i, row) in rows.into_iter().enumerate() {
            for (j, lev) in row {
                if j == i {
                    diag_pos[i] = col_idx.len();
                }
                col_idx.push(j);
                levels.push(lev);
            }
            row_ptr.push(col_idx.len());
        }
        let mut count = vec![0usize; n + 1];
        for i in 0..n {
            for p in diag_pos[i]..row_ptr[i + 1] {
                count[col_idx[p] + 1] += 1;
            }
        }
        for j in 0..n {
            count[j + 1] += count[j];
        }
        let ucol_ptr = count.clone();
        let nu = ucol_ptr[n];
        let mut ucol_row = vec![0; nu];
        let mut ucol_pos = vec![0; nu];
        let mut next = count;
        for i in 0..n {
            for p in diag_pos[i]..row_ptr[i + 1] {
                let j = col_idx[p];
                ucol_row[next[j]] = i;
                ucol_pos[next[j]] = p;
                next[j] += 1;
            }
        }
        Self {
            n,
            k,
            row_ptr,
            col_idx,
            levels,
            diag_pos,
            ucol_ptr,
            ucol_row,
            ucol_pos,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    /// Fill level of every stored entry, aligned with `col_idx`.
    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn level(&self, i: usize, j: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|p| self.levels[self.row_ptr[i] + p])
    }

    pub(crate) fn position(&self, i: usize, j: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|p| self.row_ptr[i] + p)
    }

    /// Entries of level at most `k` (the ILU(k) pattern for smaller `k`).
    pub fn restrict(&self, k: usize) -> IluPattern {
        let rows = (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .filter(|&p| self.levels[p] <= k)
                    .map(|p| (self.col_idx[p], self.levels[p]))
                    .collect()
            })
            .collect();
        Self::from_rows(self.n, k.min(self.k), rows)
    }

    /// Pattern as a matrix whose values are the fill levels.
    pub fn to_level_matrix(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                t.push((i, self.col_idx[p], self.levels[p] as f64));
            }
        }
        CsrMatrix::from_triplets(self.n, self.n, &t).expect("valid pattern")
    }
}

/// Row-by-row symbolic ILU(k): `level(i,j) = min_t level(i,t) + level(t,j) + 1`
/// over eliminated columns `t < min(i, j)`; entries above `k` are dropped.
pub fn ilu_symbolic(a: &CsrMatrix, k: usize) -> Result<IluPattern> {
    let n = a.require_square()?;
    let mut rows: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
    // upper part (t, level) of each finished row, for propagation
    let mut upper: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut w: BTreeMap<usize, usize> = a.row(i).0.iter().map(|&j| (j, 0)).collect();
        if !w.contains_key(&i) {
            return Err(Error::ZeroDiagonal { row: i });
        }
        let mut cursor = 0;
        while let Some((&t, &lt)) = w.range(cursor..i).next() {
            cursor = t + 1;
            for &(j, ltj) in &upper[t] {
                if j <= t {
                    continue;
                }
                let lev = lt + ltj + 1;
                if lev <= k {
                    let e = w.entry(j).or_insert(lev);
                    if lev < *e {
                        *e = lev;
                    }
                }
            }
        }
        let row: Vec<(usize, usize)> = w.into_iter().collect();
        upper.push(row.iter().copied().filter(|&(j, _)| j >= i).collect());
        rows.push(row);
    }
    Ok(IluPattern::from_rows(n, k, rows))
}
