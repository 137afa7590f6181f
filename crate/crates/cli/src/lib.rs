//! Command-line experiments over the `ghl` library.

pub mod config;
pub mod report;
pub mod run;
