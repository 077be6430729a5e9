//! Sparse storage, permutations, dense helpers and Matrix Market IO.

mod csc;
mod csr;
mod dense;
pub mod matrix_market;
mod permutation;

pub use csc::CscMatrix;
pub use csr::CsrMatrix;
pub use dense::{DenseMatrix, DenseMultiVector};
pub use matrix_market::{
    read_matrix_market, read_matrix_market_file, read_matrix_market_str, write_matrix_market, write_matrix_market_string,
};
pub use permutation::Permutation;
