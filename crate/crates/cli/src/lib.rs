//! Library side of the `cube-rmatrix` command: argument types, matrix files,
//! validation suites and plots.

pub mod commands;
pub mod error;
pub mod input;
pub mod matrix_io;
pub mod suites;
pub mod svg;

pub use commands::{run, RunConfig};
pub use error::CliError;
