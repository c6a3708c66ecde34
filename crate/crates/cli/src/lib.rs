//! Configuration, execution and diagnostics for the `solver` binary.

pub mod config;
pub mod diagnose;
pub mod runner;
