//! File formats, run configuration, the streaming scoring service and the
//! command-line pipeline built on [`egospatial_core`].
//!
//! All files are line-delimited JSON. The first line of every file this crate
//! writes is a `{"_header": {...}}` object carrying the resolved-config hash
//! and seed of the run that produced it.

pub mod config;
pub mod io;
pub mod report;
pub mod run;
pub mod service;

pub use egospatial_core as core;
