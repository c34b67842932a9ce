//! Scenario files, artifact formats and batch runner for the
//! `torqobs-core` observers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod formats;
pub mod report;
pub mod runner;

pub use config::Scenario;
pub use error::{Error, Result};
pub use runner::Run;
