//! Config-driven experiments: parsing, initial conditions, the CLI
//! commands and their CSV / key-value outputs.

pub mod commands;
pub mod config;
pub mod ic;
pub mod output;

pub use commands::{
    cmd_convergence, cmd_flux_compare, cmd_mollifier_report, cmd_run, Check, CommandOutput,
};
pub use config::{parse_config, Experiment, ExperimentConfig, InitialCondition};
