//! Library surface of the experiment runner: config schema, command
//! implementations, and artifact writers. The `levy-besov` binary is a thin
//! argument-parsing shell over [`commands::run_experiment`].

pub mod commands;
pub mod config;
pub mod output;
