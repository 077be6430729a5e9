use super::solver::{Triangle, TriSolver, TrsvOptions, TrsvVariant};
use crate::error::{Error, Result};
use crate::lu::LuFactors;
use crate::sparse::DenseMultiVector;

/// Level-scheduled solves for every diagonal block of an LU factorization.
/// The pivoting domains of a block act as its supernodes.
#[derive(Debug, Clone)]
pub struct LuTriangularSolver<'a> {
    factors: &'a LuFactors,
    lower: Vec<TriSolver>,
    upper: Vec<TriSolver>,
}

impl<'a> LuTriangularSolver<'a> {
    pub fn setup(factors: &'a LuFactors, variant: TrsvVariant, options: TrsvOptions) -> Result<Self> {
        let mut lower = Vec::with_capacity(factors.num_blocks());
        let mut upper = Vec::with_capacity(factors.num_blocks());
        for (k, f) in factors.blocks.iter().enumerate() {
            let mut offsets: Vec<usize> = f.domains.iter().filter(|d| !d.is_empty()).map(|d| d.start).collect();
            offsets.push(f.size());
            let relabel = |e: Error| match e {
                Error::IllConditionedBlock { condition, .. } => Error::IllConditionedBlock { block: k, condition },
                other => other,
            };
            lower.push(
                TriSolver::new(&f.l_with_unit_diagonal(), Triangle::Lower, &offsets, variant, options)
                    .map_err(relabel)?,
            );
            upper.push(TriSolver::new(&f.u_csr(), Triangle::Upper, &offsets, variant, options).map_err(relabel)?);
        }
        Ok(Self { factors, lower, upper })
    }

    pub fn n(&self) -> usize {
        self.factors.n()
    }

    pub fn setup_flops(&self) -> u64 {
        self.lower.iter().chain(&self.upper).map(TriSolver::setup_flops).sum()
    }

    pub fn kernel_launches(&self) -> usize {
        self.lower.iter().chain(&self.upper).map(TriSolver::kernel_launches).sum()
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let lu = self.factors;
        let n = lu.n();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut c = lu.row_perm.apply_vec(b);
        let mut z = Vec::new();
        for k in 0..lu.num_blocks() {
            let range = lu.block_range(k);
            for i in range.clone() {
                let (cols, vals) = lu.coupling.row(i);
                let mut s = c[i];
                for (&j, &v) in cols.iter().zip(vals) {
                    s -= v * c[j];
                }
                c[i] = s;
            }
            let seg = &mut c[range];
            z.clear();
            z.extend(lu.blocks[k].pivot_rows.iter().map(|&p| seg[p]));
            self.lower[k].solve_in_place(&mut z)?;
            self.upper[k].solve_in_place(&mut z)?;
            seg.copy_from_slice(&z);
        }
        Ok(lu.col_perm.apply_inverse_vec(&c))
    }

    pub fn solve(&self, b: &DenseMultiVector) -> Result<DenseMultiVector> {
        let mut x = DenseMultiVector::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            let xj = self.solve_vec(b.col(j))?;
            x.col_mut(j).copy_from_slice(&xj);
        }
        Ok(x)
    }
}
