//! Command-line front end and file formats for the genform toolkit.

pub mod commands;
pub mod error;
pub mod format;
pub mod suites;
