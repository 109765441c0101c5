//! Experiment harness, file formats and command-line plumbing around
//! `tomita-core`.

pub mod harness;
pub mod io;
pub mod plots;
pub mod tables;
