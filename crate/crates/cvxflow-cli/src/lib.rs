//! File formats and command line front end for the cvxflow solver.
//!
//! The instance format is line oriented in the DIMACS tradition: a problem
//! line, optional supply lines, one line per arc, comments and an optional
//! root directive. Node ids are 1-based here and converted at the boundary;
//! the core library counts from 0. Results are emitted as JSON or a small
//! text table.

mod cli;
mod instance;
mod report;

pub use cli::{run_cli, USAGE};
pub use instance::{emit_instance, parse_instance, EmitError, ParseError};
pub use report::{emit_result, format_sig12, OutputFormat};
