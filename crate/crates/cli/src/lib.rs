//! Run configured solver pipelines and report them as JSON, CSV or text.
//!
//! A run loads or generates one problem, performs the symbolic phase once and
//! then repeats the numeric and solve phases. [`sweep`] runs every point of a
//! parameter grid and keeps going past failures.

pub mod config;
mod pipeline;
pub mod report;

pub use config::{OutputFormat, ProblemSource, RunConfig, SolverKind, SweepGrid};
pub use pipeline::{run, sweep};
pub use report::{to_csv, to_human, to_json, RunReport};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const SOLVER_FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const PARTIAL_SWEEP: i32 = 3;
}
