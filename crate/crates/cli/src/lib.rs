//! Command-line front end: configuration, suites and report formats.

pub mod config;
pub mod report;
pub mod suites;
