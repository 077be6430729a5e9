//! Level-of-fill incomplete LU computed by fixed-point sweeps.
//!
//! [`ilu_symbolic`] fixes the pattern `S` of ILU(k). [`fastilu_numeric`]
//! then approximates the factors with a few sweeps of the nonlinear
//! fixed-point map whose fixed point is the exact incomplete factorization
//! computed by [`standard_ilu_numeric`]. The triangular factors can be
//! applied exactly or with the Jacobi iteration in [`fast_sptrsv`].

mod numeric;
mod pattern;
mod trsv;

pub use numeric::{fastilu_numeric, standard_ilu_numeric, FastIluParams, IluFactors, SweepMode, DEFAULT_SHIFT};
pub use pattern::{ilu_symbolic, IluPattern};
pub use trsv::{fast_sptrsv, FastIluApply, FastTrsv};
