//! Configuration, persistence and the subcommands behind the `hlab` binary.

mod commands;
mod config;
pub mod verify;

pub use commands::{cmd_cascade, cmd_hardy, cmd_kernel, cmd_report, cmd_verify, write_records, Outcome, RunDir};
pub use config::{ExperimentConfig, HardyConfig, KernelConfig, VerifyConfig};
