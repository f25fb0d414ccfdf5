//! Front end for the solver: instance generation, benchmarking, rendering
//! and the `mapf` command line.

pub mod app;
pub mod bench;
pub mod generate;
pub mod render;

pub use app::{run, Cli, CliError};
