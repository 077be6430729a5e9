use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Execution;

/// Fill-reducing ordering applied inside every dissection leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafOrdering {
    #[default]
    MinDegree,
    NestedDissection,
}

/// Where the maximum weight matching is computed. Both give the same
/// assignment (a perfect matching of a block triangular matrix never leaves
/// the diagonal blocks); per-block is cheaper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMatchingScope {
    #[default]
    Global,
    PerBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Threshold for keeping the diagonal pivot: `|a_jj| >= pivot_tol * max_k |a_kj|`.
    pub pivot_tol: f64,
    pub use_cardinality_matching: bool,
    pub use_weight_matching: bool,
    pub weight_matching_scope: WeightMatchingScope,
    /// Replace an all-zero pivot column by `eps * ||A_bb||_1` instead of failing.
    pub perturb_zero_pivots: bool,
    /// Number of dissection leaves for large diagonal blocks (power of two).
    pub nd_leaves: usize,
    /// Blocks with more rows than this are dissected.
    pub nd_threshold: usize,
    pub leaf_ordering: LeafOrdering,
    /// Factor storage growth when the estimate turns out too small.
    pub realloc_growth: f64,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-3,
            use_cardinality_matching: true,
            use_weight_matching: false,
            weight_matching_scope: WeightMatchingScope::Global,
            perturb_zero_pivots: false,
            nd_leaves: 4,
            nd_threshold: 64,
            leaf_ordering: LeafOrdering::MinDegree,
            realloc_growth: 1.5,
            execution: Execution::Sequential,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pivot_tol) {
            return Err(Error::InvalidOption(format!(
                "pivot_tol must lie in [0, 1], got {}",
                self.pivot_tol
            )));
        }
        if !(self.realloc_growth > 1.0) {
            return Err(Error::InvalidOption(format!(
                "realloc_growth must exceed 1, got {}",
                self.realloc_growth
            )));
        }
        if self.nd_leaves == 0 || !self.nd_leaves.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.nd_leaves));
        }
        Ok(())
    }
}
