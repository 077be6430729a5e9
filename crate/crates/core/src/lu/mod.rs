//! Sparse direct LU in three phases.
//!
//! [`symbolic_analyze`] looks only at the pattern: it permutes the matrix to
//! block lower triangular form, dissects every large diagonal block and
//! estimates factor storage. [`numeric_factorize`] factorizes each diagonal
//! block with threshold partial pivoting confined to its pivoting domains,
//! and [`LuFactors::solve`] runs block forward substitution through the
//! coupling entries that were never factorized.
//!
//! ```
//! use nodesolve::lu::{numeric_factorize, symbolic_analyze, SolverOptions};
//! use nodesolve::CsrMatrix;
//!
//! let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
//! let plan = symbolic_analyze(&a, &SolverOptions::default()).unwrap();
//! let lu = numeric_factorize(&plan, &a).unwrap();
//! assert_eq!(lu.solve_vec(&[3.0, 4.0]).unwrap(), vec![4.0, 3.0]);
//! ```

mod numeric;
mod options;
mod solve;
mod symbolic;

pub use numeric::{numeric_factorize, BlockFactors, LuFactors, PerturbedPivot};
pub use options::{LeafOrdering, SolverOptions, WeightMatchingScope};
pub use solve::{iterative_refinement, Refinement};
pub use symbolic::{symbolic_analyze, BlockPlan, SymbolicPlan};
