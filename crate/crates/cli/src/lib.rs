//! Batch front end for `bundle-reduction`.
//!
//! A run is described by a [`RunConfig`](config::RunConfig): a flat JSON
//! document whose fields can also be set by command-line flags. The three
//! commands evaluate the curvature report, the identity suite or the Monte
//! Carlo reduction check and write one [`Row`](output::Row) per result as JSON
//! or CSV.
//!
//! Exit codes: 0 when every checked row passes, 1 on a numeric failure, 2 on
//! invalid input.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod table;

pub use commands::{run, Outcome};
pub use config::{Command, Format, RunConfig};
pub use error::CliError;
pub use output::{Report, Row};
pub use table::OracleTable;
