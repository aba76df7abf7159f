//! Command-line harness around the `texelatt` library: one subcommand per
//! pipeline step, plus `run`, which drives the whole experiment from a TOML
//! config with per-stage caching.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod ops;
pub mod pipeline;

pub use config::ExperimentConfig;
pub use error::CliError;
