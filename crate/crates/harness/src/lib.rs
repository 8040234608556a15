//! Case A / Case B experiments and the `cckm` command-line tool.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod scenario;
pub mod stages;

pub use config::RunConfig;
pub use error::HarnessError;
pub use experiment::{run_experiment, ExperimentOutput, TableRow};
pub use scenario::{make_case, make_case_a, make_case_b, CaseName, ScenarioSpec};
