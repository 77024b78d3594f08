//! Command-line front end: tick ingestion, panel files, simulation,
//! estimation and tests.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod json;
pub mod panel_csv;
