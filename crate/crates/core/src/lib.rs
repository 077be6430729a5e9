//! On-node sparse linear solvers.
//!
//! The crate bundles three solver families behind a common
//! symbolic / numeric / solve life cycle:
//!
//! * [`lu`]: a sparse direct LU solver that reorders the matrix into block
//!   triangular form, dissects large diagonal blocks, and factorizes each
//!   block column by column with threshold partial pivoting.
//! * [`sptrsv`]: four level-scheduled triangular solve variants, ranging from
//!   plain block substitution to a partitioned-inverse product of sparse
//!   level factors.
//! * [`fastilu`]: level-of-fill ILU(k) computed by fixed-point sweeps, plus
//!   the matching Jacobi-style triangular solve.
//!
//! [`krylov`] provides restarted GMRES that consumes any of them as a right
//! preconditioner, and [`problems`] generates the stencil and circuit-like
//! test matrices.

pub mod error;
pub mod fastilu;
pub mod krylov;
pub mod lu;
pub mod ordering;
pub mod problems;
pub mod sparse;
pub mod sptrsv;

pub use error::{Error, Result};
pub use sparse::{CscMatrix, CsrMatrix, DenseMatrix, DenseMultiVector, Permutation};

/// Whether an operation may use the rayon thread pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    #[default]
    Sequential,
    Parallel,
}
