//! Structural preprocessing: matchings, block triangular form, nested
//! dissection and minimum degree ordering.

mod btf;
mod graph;
mod matching;
mod min_degree;
mod nd;

pub use btf::{btf_decompose, BtfForm};
pub use matching::{max_cardinality_matching, max_weight_matching, Matching};
pub use min_degree::min_degree;
pub use nd::{nested_dissection, NdBlock, NdBlockKind, NdPlan};

pub(crate) use graph::SymGraph;
