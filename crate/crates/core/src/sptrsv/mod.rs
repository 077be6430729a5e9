//! Level-set sparse triangular solves.
//!
//! A triangular matrix is split into contiguous diagonal blocks and the
//! blocks are grouped into levels of mutually independent work. Four
//! variants trade setup work for cheaper solves:
//!
//! | variant | setup | per level |
//! |---------|-------|-----------|
//! | V1 | schedule only | block substitution, then update |
//! | V2 | dense inverse of each diagonal block | inverse product, then update |
//! | V3 | V2 plus `-L[R,b] D_b^-1` panels | one merged product per block |
//! | V4 | V3 assembled into sparse `L_l^-1` | one sparse product |
//!
//! V3 and V4 realize the partitioned inverse `L^-1 = L_n^-1 ... L_1^-1`.

mod lu;
mod schedule;
mod solver;

pub use lu::LuTriangularSolver;
pub use schedule::{build_level_schedule, LevelSchedule};
pub use solver::{Triangle, TriSolver, TrsvOptions, TrsvVariant};
