//! Library side of the `phipp` command: configuration, CSV ingestion, the
//! three commands and their JSON and grid outputs.

pub mod app;
pub mod commands;
pub mod config;
pub mod input;
pub mod report;

pub use commands::{cmd_realdata, cmd_sim, cmd_test, Output, Simulation};
pub use config::RunConfig;
pub use report::Report;
