//! Command-line driver: runs the family pipeline, keeps the record cache and
//! writes the CSV tables.

pub mod commands;
pub mod config;
pub mod criteria;
pub mod error;
pub mod output;
pub mod store;
