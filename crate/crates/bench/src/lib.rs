//! Benchmark harness and command-line front end for `epass-core`.
//!
//! Reports are plain CSV and JSON; see [`report`] for the layout.

pub mod cli;
pub mod compare;
pub mod measure;
pub mod report;
pub mod suite;
pub mod vectors;
