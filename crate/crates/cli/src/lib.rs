//! Command-line front end: run configuration, the lemma suite, report emission and the commands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod lemmas;
pub mod report;

pub use error::CliError;
