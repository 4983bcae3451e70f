//! Command line front end for the palsy detection pipeline.

pub mod cache;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod run;

pub use error::{CliError, Result};
