use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix market parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("matrix must be square, got {nrows}x{ncols}")]
    NotSquare { nrows: usize, ncols: usize },

    #[error("structurally singular: {matched} of {n} columns matched, deficient columns {deficient:?}")]
    StructurallySingular {
        n: usize,
        matched: usize,
        deficient: Vec<usize>,
    },

    #[error("number of leaves must be a power of two, got {0}")]
    NotPowerOfTwo(usize),

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("sparsity pattern differs from the analyzed pattern")]
    PatternMismatch,

    #[error("zero pivot in block {block}, column {column} (perturbation disabled)")]
    SingularBlock { block: usize, column: usize },

    #[error("diagonal block {block} is numerically singular (condition estimate {condition:e})")]
    IllConditionedBlock { block: usize, condition: f64 },

    #[error("matrix is not {0} triangular")]
    NotTriangular(&'static str),

    #[error("structurally zero diagonal in row {row}")]
    ZeroDiagonal { row: usize },

    #[error("zero pivot u[{row},{row}] during incomplete factorization; {advice}")]
    ZeroPivot { row: usize, advice: String },

    #[error("preconditioner failure: {0}")]
    Preconditioner(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
