//! Library surface of the `jspec` command-line tool: input parsing,
//! deterministic emitters, the level-cloud cache, and the scenario
//! orchestrator. The binary in `main.rs` is a thin argument shell over
//! [`scenario::run_scenario`].

pub mod cache;
pub mod emit;
pub mod error;
pub mod input;
pub mod scenario;

pub use error::{CliError, CliResult};
