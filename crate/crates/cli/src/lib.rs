//! Command-line driver: planning runs persisted as JSON, counterfactual
//! explanations answered from saved runs, and seeded batches.

pub mod batch;
pub mod config;
pub mod error;
pub mod run;

pub use error::{exit, CliError};
