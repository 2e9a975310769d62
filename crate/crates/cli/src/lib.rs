//! Command line harness around the morphca core: config loading, the
//! experiment commands, and per-run summary statistics.

pub mod commands;
pub mod config;
pub mod stats;
